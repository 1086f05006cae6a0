use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgk-lvg")).args(args).output().unwrap()
}

fn solve(config: &Path, out: &Path) -> Output {
    bin(&["solve", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"])
}

#[test]
fn solve_writes_outputs_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    fs::write(&config, "# small smoke run\ncase = accuracy\nsolver = lvg\nnx = 20\nt_final = 0.02\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = solve(&config, out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["macro.csv", "grids.csv", "conservation.csv"] {
        let x = fs::read(a.join(name)).unwrap();
        assert!(!x.is_empty(), "{name} is empty");
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name} differs between reruns");
    }
    let header = fs::read_to_string(a.join("macro.csv")).unwrap();
    assert!(header.starts_with("x,rho,U,T\n"));
    assert_eq!(header.lines().count(), 21);
    assert!(a.join("report.txt").exists());
    assert!(!a.join("tau.csv").exists());

    let cmp = bin(&["compare", a.join("macro.csv").to_str().unwrap(), b.join("macro.csv").to_str().unwrap()]);
    assert!(cmp.status.success());
}

#[test]
fn reference_solver_runs_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("ref.cfg");
    fs::write(&config, "case=accuracy\nsolver=reference\norder=1\nnx=16\nt_final=0.01\n").unwrap();
    let o = solve(&config, &dir.path().join("out"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let grids = fs::read_to_string(dir.path().join("out/grids.csv")).unwrap();
    assert!(grids.lines().skip(1).all(|l| l.ends_with(",60")));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["case = nowhere\n", "case=accuracy\nnx=2\n", "case=accuracy\nepsilon=1e-2\ntau_C=1\n", "cfl\n"] {
        let config = dir.path().join("bad.cfg");
        fs::write(&config, text).unwrap();
        let o = solve(&config, &dir.path().join("out"));
        assert_eq!(o.status.code(), Some(2), "config `{text}`");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = solve(&dir.path().join("absent.cfg"), dir.path());
    assert_eq!(o.status.code(), Some(1));
}

//! Plain-text run configuration, CSV output and result comparison.
//!
//! A config is a list of `key = value` lines; blank lines and lines starting
//! with `#` are ignored. Only `case` is mandatory, everything else falls
//! back to the case defaults.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::cases::{diagnostics, CaseKind, Diagnostics, TestCase};
use crate::error::SolverError;
use crate::grid::{collision_time, CollisionModel, DistributionField, GasParams, MomentSet, VelocityGrid};
use crate::lvg::{time_step_from_cfl, LvgSolver, Order, SolverConfig, StepRecord};
use crate::reference::ReferenceSolver;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Compare(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Lvg,
    Reference,
}

/// Parsed config; `None` means "use the case default".
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawConfig {
    pub case: Option<CaseKind>,
    pub solver: Option<SolverKind>,
    pub order: Option<Order>,
    pub cfl: Option<f64>,
    pub nx: Option<usize>,
    pub nv0: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub tol: Option<f64>,
    pub theta: Option<f64>,
    pub epsilon: Option<f64>,
    pub tau_c: Option<f64>,
    pub tau_omega: Option<f64>,
    pub t_final: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

/// Everything needed for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: TestCase,
    pub solver: SolverKind,
    pub config: SolverConfig,
    pub out_dir: Option<PathBuf>,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    resolve(parse_raw(text)?)
}

pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ConfigError::Parse { line: line_no, message };
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if seen.iter().any(|k| k == key) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        seen.push(key.to_string());
        let num = || value.parse::<f64>().map_err(|_| err(format!("`{key}` expects a number, got `{value}`")));
        let int = || value.parse::<usize>().map_err(|_| err(format!("`{key}` expects an integer, got `{value}`")));
        match key {
            "case" => {
                raw.case = Some(CaseKind::parse(value).ok_or_else(|| err(format!("unknown case `{value}`")))?)
            }
            "solver" => {
                raw.solver = Some(match value {
                    "lvg" => SolverKind::Lvg,
                    "reference" => SolverKind::Reference,
                    _ => return Err(err(format!("unknown solver `{value}`"))),
                })
            }
            "order" => {
                let n = value.parse::<u32>().map_err(|_| err(format!("`order` expects 1 or 2, got `{value}`")))?;
                raw.order = Some(Order::from_int(n).ok_or_else(|| err(format!("`order` expects 1 or 2, got {n}")))?);
            }
            "cfl" => raw.cfl = Some(num()?),
            "nx" => raw.nx = Some(int()?),
            "nv0" => raw.nv0 = Some(int()?),
            "alpha" => raw.alpha = Some(num()?),
            "beta" => raw.beta = Some(num()?),
            "tol" => raw.tol = Some(num()?),
            "theta" => raw.theta = Some(num()?),
            "epsilon" => raw.epsilon = Some(num()?),
            "tau_C" => raw.tau_c = Some(num()?),
            "tau_omega" => raw.tau_omega = Some(num()?),
            "t_final" => raw.t_final = Some(num()?),
            "out_dir" => raw.out_dir = Some(PathBuf::from(value)),
            _ => return Err(err(format!("unknown key `{key}`"))),
        }
    }
    Ok(raw)
}

fn resolve(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let invalid = |m: &str| ConfigError::Validation(m.to_string());
    let kind = raw.case.ok_or_else(|| invalid("missing `case`"))?;
    if raw.epsilon.is_some() && (raw.tau_c.is_some() || raw.tau_omega.is_some()) {
        return Err(invalid("`epsilon` cannot be combined with `tau_C`/`tau_omega`"));
    }
    if raw.nx.is_some_and(|n| n < 3) {
        return Err(invalid("`nx` must be at least 3"));
    }
    if raw.nv0.is_some_and(|n| n < 2) {
        return Err(invalid("`nv0` must be at least 2"));
    }
    let solver_err = |e: SolverError| ConfigError::Validation(e.to_string());
    let mut case = match kind {
        CaseKind::Accuracy => TestCase::accuracy(raw.nx.unwrap_or(80), raw.nv0.unwrap_or(60), 1e-2),
        CaseKind::Riemann => TestCase::riemann(raw.nx.unwrap_or(300), raw.nv0.unwrap_or(600), 1.08e-9),
        CaseKind::Blast => TestCase::blast(raw.nx.unwrap_or(500), 1.08e-9),
    }
    .map_err(solver_err)?;
    if let Some(nv0) = raw.nv0 {
        if kind == CaseKind::Blast {
            case.reference_grid = VelocityGrid::spanning(-190.0, 190.0, nv0).map_err(solver_err)?;
        }
    }

    let collision = match (raw.epsilon, raw.tau_c, raw.tau_omega, case.gas.collision) {
        (Some(eps), ..) => CollisionModel::Constant(eps),
        (None, None, None, model) => model,
        (None, c, omega, model) => {
            let (c0, w0) = match model {
                CollisionModel::TauLaw { c, omega } => (c, omega),
                CollisionModel::Constant(_) => (1.0, 0.0),
            };
            CollisionModel::TauLaw { c: c.unwrap_or(c0), omega: omega.unwrap_or(w0) }
        }
    };
    case.gas = GasParams::new(case.gas.r, collision).map_err(solver_err)?;

    if let Some(t) = raw.t_final {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("`t_final` must be positive"));
        }
        case.t_final = t;
    }
    let cfl = raw.cfl.unwrap_or(case.cfl);
    case.cfl = cfl;
    let mut config = SolverConfig::new(case.gas, cfl, raw.order.unwrap_or(Order::Second));
    if let Some(a) = raw.alpha {
        config.alpha = a;
    }
    if let Some(b) = raw.beta {
        config.beta = b;
    }
    if let Some(t) = raw.tol {
        config.tol = t;
    }
    if let Some(t) = raw.theta {
        config.theta = t;
    }
    config.validate().map_err(solver_err)?;
    Ok(RunConfig { case, solver: raw.solver.unwrap_or(SolverKind::Lvg), config, out_dir: raw.out_dir })
}

/// Result of one run, independent of the solver used.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub field: DistributionField,
    pub initial_totals: [f64; 3],
    pub steps: Vec<StepRecord>,
    pub diagnostics: Diagnostics,
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, SolverError> {
    let case = &cfg.case;
    let (field, initial_totals, steps, dt, wall) = match cfg.solver {
        SolverKind::Lvg => {
            let solver = LvgSolver::new(cfg.config, case.space)?;
            let r = solver.run(case.initial_field(&cfg.config)?, case.t_final)?;
            (r.state.field, r.initial_totals, r.steps, r.dt, r.wall_time)
        }
        SolverKind::Reference => {
            let solver = ReferenceSolver {
                space: case.space,
                gas: case.gas,
                order: cfg.config.order,
                theta: cfg.config.theta,
                cfl: cfg.config.cfl,
            };
            // Same step as a local-grid run of this case would take.
            let lattices: Vec<VelocityGrid> = case.initial_field(&cfg.config)?.cells.iter().map(|c| c.grid).collect();
            let dt = time_step_from_cfl(cfg.config.cfl, &lattices, case.space.dx())?;
            let r = solver.run_with_dt(&case.reference_field()?, case.t_final, dt)?;
            (r.state.to_field(), r.initial_totals, r.steps, r.dt, r.wall_time)
        }
    };
    let diagnostics = diagnostics(&initial_totals, &steps, dt, wall);
    Ok(RunOutput { field, initial_totals, steps, diagnostics })
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `cfg` and writes the CSV outputs and `report.txt` into `out_dir`.
pub fn run_and_emit(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutput, CliError> {
    let out = run(cfg)?;
    fs::create_dir_all(out_dir)?;
    let space = &cfg.case.space;
    let moments: Vec<MomentSet> = out.field.moments();

    let mut macro_rows = Vec::with_capacity(moments.len());
    for (x, m) in space.centers().into_iter().zip(&moments) {
        let rt = m.rt()?;
        macro_rows.push(vec![fmt(x), fmt(m.rho), fmt(m.velocity()), fmt(rt / cfg.case.gas.r)]);
    }
    write_csv(&out_dir.join("macro.csv"), &["x", "rho", "U", "T"], macro_rows.into_iter())?;

    write_csv(
        &out_dir.join("grids.csv"),
        &["cell", "v_min", "v_max", "dv", "N_v"],
        out.field.cells.iter().enumerate().map(|(i, c)| {
            vec![i.to_string(), fmt(c.grid.v_min), fmt(c.grid.v_max()), fmt(c.grid.dv), c.grid.nv.to_string()]
        }),
    )?;

    if matches!(cfg.case.gas.collision, CollisionModel::TauLaw { .. }) {
        let mut rows = Vec::with_capacity(moments.len());
        for (x, m) in space.centers().into_iter().zip(&moments) {
            rows.push(vec![fmt(x), fmt(collision_time(m, &cfg.case.gas)?)]);
        }
        write_csv(&out_dir.join("tau.csv"), &["x", "tau"], rows.into_iter())?;
    }

    let first = std::iter::once(vec![
        "0".to_string(),
        fmt(out.initial_totals[0]),
        fmt(out.initial_totals[1]),
        fmt(out.initial_totals[2]),
    ]);
    let rest = out
        .steps
        .iter()
        .map(|s| vec![s.step.to_string(), fmt(s.totals[0]), fmt(s.totals[1]), fmt(s.totals[2])]);
    write_csv(&out_dir.join("conservation.csv"), &["step", "mass", "momentum", "energy"], first.chain(rest))?;

    fs::write(out_dir.join("report.txt"), report(cfg, &out.diagnostics))?;
    Ok(out)
}

pub fn report(cfg: &RunConfig, d: &Diagnostics) -> String {
    let mut s = String::new();
    let solver = match cfg.solver {
        SolverKind::Lvg => "lvg",
        SolverKind::Reference => "reference",
    };
    let _ = writeln!(s, "case: {}", cfg.case.kind.name());
    let _ = writeln!(s, "solver: {solver}");
    let _ = writeln!(s, "order: {}", cfg.config.order.as_int());
    let _ = writeln!(s, "nx: {}", cfg.case.space.nx);
    let _ = writeln!(s, "cfl: {}", cfg.config.cfl);
    let _ = writeln!(s, "t_final: {}", cfg.case.t_final);
    let _ = writeln!(s, "dt: {:.16e}", d.dt);
    let _ = writeln!(s, "steps: {}", d.steps);
    let _ = writeln!(s, "wall_time_s: {:.3}", d.wall_time);
    let _ = writeln!(s, "mean_nv_all_steps: {:.4}", d.nv_mean);
    let _ = writeln!(s, "mean_nv_final: {:.4}", d.nv_mean_final);
    let _ = writeln!(s, "nv_min: {}", d.nv_min);
    let _ = writeln!(s, "nv_max: {}", d.nv_max);
    let _ = writeln!(s, "min_f: {:.16e}", d.min_f);
    let _ = writeln!(s, "max_drift_mass: {:.3e}", d.max_drift[0]);
    let _ = writeln!(s, "max_drift_momentum: {:.3e}", d.max_drift[1]);
    let _ = writeln!(s, "max_drift_energy: {:.3e}", d.max_drift[2]);
    s
}

/// Column-wise differences between two `macro.csv` files.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `(name, relative L¹, L∞)` for `rho`, `U`, `T`.
    pub columns: Vec<(String, f64, f64)>,
}

impl std::fmt::Display for Comparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "column,rel_l1,linf")?;
        for (name, l1, linf) in &self.columns {
            writeln!(f, "{name},{l1:.6e},{linf:.6e}")?;
        }
        Ok(())
    }
}

fn read_macro(path: &Path) -> Result<Vec<[f64; 4]>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut row = [0.0; 4];
        for (k, slot) in row.iter_mut().enumerate() {
            let field = rec.get(k).ok_or_else(|| CliError::Compare(format!("{}: short row", path.display())))?;
            *slot = field
                .trim()
                .parse()
                .map_err(|_| CliError::Compare(format!("{}: bad number `{field}`", path.display())))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn compare(a: &Path, b: &Path) -> Result<Comparison, CliError> {
    let ra = read_macro(a)?;
    let rb = read_macro(b)?;
    if ra.len() != rb.len() {
        return Err(CliError::Compare(format!("meshes differ: {} vs {} cells", ra.len(), rb.len())));
    }
    let scale = ra.iter().map(|r| r[0].abs()).fold(0.0, f64::max).max(1.0);
    if ra.iter().zip(&rb).any(|(p, q)| (p[0] - q[0]).abs() > 1e-12 * scale) {
        return Err(CliError::Compare("cell centres differ".into()));
    }
    let columns = ["rho", "U", "T"]
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let c = k + 1;
            let num: f64 = ra.iter().zip(&rb).map(|(p, q)| (p[c] - q[c]).abs()).sum();
            let den: f64 = rb.iter().map(|q| q[c].abs()).sum();
            let linf = ra.iter().zip(&rb).map(|(p, q)| (p[c] - q[c]).abs()).fold(0.0, f64::max);
            let l1 = if den > 0.0 { num / den } else { num };
            (name.to_string(), l1, linf)
        })
        .collect();
    Ok(Comparison { columns })
}

use std::path::PathBuf;
use std::process::ExitCode;

use bgk_lvg::cli::{compare, parse_config, run_and_emit, CliError, ConfigError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bgk-lvg", about = "1D BGK solver on local velocity grids")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the case described by a config file and write CSV outputs.
    Solve {
        config: PathBuf,
        /// Output directory (overrides `out_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare the rho, U, T columns of two macro.csv files.
    Compare { a: PathBuf, b: PathBuf },
}

fn solve(config: PathBuf, out: Option<PathBuf>, threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError::Validation(format!("threads: {e}")))?;
    }
    let text = std::fs::read_to_string(&config)?;
    let cfg = parse_config(&text)?;
    let dir = out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let result = run_and_emit(&cfg, &dir)?;
    let d = &result.diagnostics;
    println!(
        "{} steps, mean N_v {:.2}, max drift {:.2e}, wrote {}",
        d.steps,
        d.nv_mean,
        d.max_drift.iter().copied().fold(0.0, f64::max),
        dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match args.command {
        Command::Solve { config, out, threads } => solve(config, out, threads),
        Command::Compare { a, b } => compare(&a, &b).map(|c| print!("{c}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Command-line front end: `fujita-lab <subcommand> --config PATH [--out DIR]`.

pub mod config;
pub mod dispatch;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{parse_config, parse_str, render, ConfigError, ExperimentConfig};
pub use dispatch::{dispatch, DispatchError, RunOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve Δh = Vh and fit its growth (CSV r,h,envelope + JSON verdict).
    Hsolve,
    /// Riesz potentials of V (CSV x,I1V,I2V,ratio).
    Riesz,
    /// One nonlinear run (CSV t,sup_u,mu_mass + JSON outcome).
    Evolve,
    /// Phase-diagram sweep over p and data amplitude.
    Sweep,
    /// Picard iteration of the Duhamel map (JSON log + trace CSV).
    Duhamel,
    /// Test-function sums over the i-ladder (CSV i,J,L_time,L_final,J_neg).
    Testfn,
    /// Heat-kernel columns (CSV r,t,P + DUE JSON).
    Kernel,
    /// Cumulative volumes of mu0, mu, nu with growth fits.
    Volume,
}

#[derive(Debug, Parser)]
#[command(name = "fujita-lab", version, about = "Blow-up vs. global existence laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides [output] dir.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "FUJITA_LAB_WORKERS")]
    pub workers: Option<usize>,
    /// Full-grid checks instead of the sampling lattice.
    #[arg(long, global = true)]
    pub slow: bool,
}

/// Parses arguments, runs the subcommand and returns the process exit code:
/// 0 success, 1 scientific failure, 2 usage or configuration error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let Some(path) = cli.config.as_ref() else {
        eprintln!("error: --config PATH is required");
        return 2;
    };
    let cfg = match parse_config(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config {}:\n{e}", path.display());
            return 2;
        }
    };
    if cli.workers == Some(0) {
        eprintln!("error: --workers must be at least 1");
        return 2;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| PathBuf::from(&o.dir)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions { workers: cli.workers, slow: cli.slow };
    match dispatch(cli.command, &cfg, &out, opts) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! `optgd`: command-line experiments for exact-line-search gradient descent.
//!
//! Each subcommand reproduces one figure or table of the underlying study at
//! desk scale, emitting a CSV file plus a JSON metadata sidecar. All commands
//! are deterministic given identical flags (including `--seed`): rerunning a
//! command produces byte-identical output, independent of the worker count.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical non-convergence (partial
//! output is retained in the latter case).

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or impossible request; exit code 2.
    Usage(String),
    /// The computation ran but did not converge; exit code 3.
    Numerical(String),
}

impl From<optgd::Error> for CliError {
    fn from(e: optgd::Error) -> Self {
        match e {
            optgd::Error::NonConvergence(_) => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "optgd",
    version,
    about = "Exact-line-search gradient descent experiments (CSV + JSON metadata)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace one gradient-descent run on a diagonal quadratic: per-step
    /// energy norm, shrinking factor and step size.
    RocTrace(RocTraceArgs),
    /// Worst, average and root-mean-square rate of convergence as a function
    /// of the inverse condition number a.
    AverageRoc(AverageRocArgs),
    /// Histogram of the limit angle over uniform random seeds (needs an
    /// intermediate eigenvalue, n >= 3).
    LimitAngles(LimitAnglesArgs),
    /// Phase retrieval: exact line search vs constant step size, error and
    /// objective per iteration.
    PhaseRetrieval(PhaseRetrievalArgs),
    /// Exact-line-search runs on the Rosenbrock function vs the worst-case
    /// reference curve.
    Rosenbrock(RosenbrockArgs),
    /// Condition numbers of the phase-retrieval Hessian at the solution,
    /// along a sensor direction and along random directions.
    HessianTable(HessianTableArgs),
}

#[derive(clap::Args, Debug, Serialize)]
pub struct RocTraceArgs {
    /// Eigenvalues, comma-separated, strictly decreasing and positive.
    #[arg(long)]
    lambda: Option<String>,
    /// Dimension, used with --a (and optionally --alpha) instead of --lambda.
    #[arg(long)]
    n: Option<usize>,
    /// Inverse condition number lambda_n / lambda_1 in (0, 1).
    #[arg(long)]
    a: Option<f64>,
    /// Interior normalized levels in (0,1), comma-separated, length n-2;
    /// defaults to equispaced.
    #[arg(long)]
    alpha: Option<String>,
    /// Sample the seed vector uniformly on the unit sphere from this seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit start: a comma-separated vector, or "worst" for the
    /// worst-case seed.
    #[arg(long)]
    x0: Option<String>,
    #[arg(long, default_value_t = 500)]
    max_k: usize,
    /// Stop when the energy norm falls below tol times its initial value.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct AverageRocArgs {
    /// Inverse condition numbers to sweep (comma-separated, n=2 spectra).
    #[arg(long)]
    a: Option<String>,
    /// A single explicit spectrum instead of an a-sweep.
    #[arg(long)]
    lambda: Option<String>,
    /// quad (adaptive quadrature, n=2 only) or mc (Monte Carlo).
    #[arg(long)]
    method: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Absolute tolerance for the adaptive quadrature.
    #[arg(long, default_value_t = 1e-12)]
    quad_tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct LimitAnglesArgs {
    /// Eigenvalues, comma-separated; needs n >= 3.
    #[arg(long)]
    lambda: String,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct PhaseRetrievalArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// els (exact line search) or const (fixed step size).
    #[arg(long, default_value = "els")]
    method: String,
    /// Step size for --method const.
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    /// Target relative error against the planted signal.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_k: usize,
    /// spectral (default) or truth (start at the planted signal).
    #[arg(long, default_value = "spectral")]
    start: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct RosenbrockArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Number of independently seeded runs.
    #[arg(long, default_value_t = 100)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target objective value per run.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct HessianTableArgs {
    /// Problem dimensions, comma-separated; m defaults to n * log2(n).
    #[arg(long, default_value = "100,200,400")]
    sizes: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    // Optional worker-count hint; per-sample seeding makes all results
    // independent of the pool size, so this only affects wall time.
    if let Ok(v) = std::env::var("ELS_GD_THREADS") {
        if let Ok(k) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }

    let cli = Cli::parse();
    let result = match cli.command {
        Command::RocTrace(args) => commands::roc_trace(&args),
        Command::AverageRoc(args) => commands::average_roc(&args),
        Command::LimitAngles(args) => commands::limit_angles(&args),
        Command::PhaseRetrieval(args) => commands::phase_retrieval(&args),
        Command::Rosenbrock(args) => commands::rosenbrock(&args),
        Command::HessianTable(args) => commands::hessian_table(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

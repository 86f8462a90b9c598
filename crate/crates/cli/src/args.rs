use std::path::PathBuf;

use bp_core::laplacian::DEFAULT_SOLVE_TOL;
use bp_core::solvers::{Init, Setting, DEFAULT_EPS, DEFAULT_GAP_TOL};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "bpdm",
    version,
    about = "Basis pursuit via dissipation minimization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance and write a result JSON (and optionally a trace).
    Solve(SolveArgs),
    /// Run several solvers on random instances and emit a long-format CSV.
    Bench(BenchArgs),
    /// Write a random instance as JSON.
    Generate(GenerateArgs),
}

/// Where the instance comes from: a file, or a random draw.
#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Instance file: JSON, or Matrix Market when the extension is `.mtx`.
    #[arg(long, conflicts_with_all = ["m", "n"])]
    pub input: Option<PathBuf>,
    /// Right-hand side for a Matrix Market input (one value per line).
    #[arg(long, requires = "input")]
    pub rhs: Option<PathBuf>,
    /// Columns of a random instance (used when --input is absent).
    #[arg(long, requires = "n")]
    pub m: Option<usize>,
    /// Rows of a random instance.
    #[arg(long, requires = "m")]
    pub n: Option<usize>,
    /// Fraction of nonzeros in the random ground truth.
    #[arg(long, default_value_t = 0.2)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value = "pgs")]
    pub solver: String,
    /// Relative error target; used by the `theoretical` settings.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    /// Step parameter: a number, `default` or `theoretical`.
    #[arg(long, default_value = "default")]
    pub beta: Setting<f64>,
    /// Floor on the weights: a number, `default` or `theoretical`.
    #[arg(long, default_value = "default")]
    pub delta: Setting<f64>,
    /// Iteration budget: a count, `default` or `theoretical`.
    #[arg(long, default_value = "default")]
    pub max_iters: Setting<u64>,
    /// Stop once the duality gap is at most this fraction of ||s||_1.
    #[arg(long, default_value_t = DEFAULT_GAP_TOL)]
    pub gap_tol: f64,
    /// Initial weights: `ls` (least squares) or `ones`.
    #[arg(long, default_value = "ls")]
    pub init: Init,
    /// Record a trace row (and check the gap) every this many iterations.
    #[arg(long, default_value_t = 1)]
    pub trace_every: u64,
    /// Constant mixing weight for ags/ags2.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Relative residual target of each Laplacian solve.
    #[arg(long, default_value_t = DEFAULT_SOLVE_TOL)]
    pub solve_tol: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Trace CSV with columns iter,f,l1,gap,elapsed_ms.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Result JSON; printed to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    #[arg(long, default_value_t = 80)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2)]
    pub density: f64,
    /// Number of instances, seeded first-seed, first-seed + 1, ...
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "pgs,ags,ags2")]
    pub solvers: Vec<String>,
    #[arg(long, default_value = "2000")]
    pub max_iters: Setting<u64>,
    #[arg(long, default_value_t = 1e-10)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 1)]
    pub trace_every: u64,
    /// Leave out the elapsed_ms column, making the output reproducible.
    #[arg(long)]
    pub no_timing: bool,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

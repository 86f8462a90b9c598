use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is rank deficient: estimated rank {rank} < {rows} rows")]
    RankDeficient { rank: usize, rows: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("graph is not connected")]
    DisconnectedGraph,

    #[error("node index {node} out of range for {num_nodes} nodes")]
    InvalidNodeIndex { node: usize, num_nodes: usize },

    #[error("density must lie in (0, 1], got {0}")]
    InvalidDensity(f64),

    #[error("weight {index} is not strictly positive: {value}")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("Laplacian system is ill-conditioned (condition estimate {estimate:.3e})")]
    IllConditioned { estimate: f64 },

    #[error("iterative solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("size {size} exceeds the limit {limit} for dense materialization")]
    SizeLimitExceeded { size: usize, limit: usize },

    #[error("relative error target must lie in (0, 1), got {0}")]
    InvalidEps(f64),

    #[error("entry {index} must be strictly positive, got {value}")]
    NonPositiveInput { index: usize, value: f64 },

    #[error("entry {index} is zero")]
    ZeroEntry { index: usize },

    #[error("multiplicative step overflow: exponent {exponent:.3e} exceeds the guard")]
    Overflow { exponent: f64 },

    #[error("brute-force oracle is limited to m <= {limit}, got m = {m}")]
    TooLarge { m: usize, limit: usize },

    #[error("no basic solution satisfies the system")]
    Infeasible,

    #[error("finite-difference step {step} leaves the positive orthant at coordinate {index}")]
    StepTooLarge { index: usize, step: f64 },

    #[error("unknown scheme '{0}'")]
    UnknownScheme(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

use std::path::PathBuf;

use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("tensor not trace-free: max |tr| = {0:e}")]
    NotTraceFree(f64),

    #[error("point or sphere leaves the domain: {0}")]
    OutsideDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("non-coercive operator: Rayleigh quotient {0:e} <= 0")]
    NonCoercive(f64),

    #[error("kernel-incompatible source")]
    KernelIncompatible,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("solution lost positivity: {0}")]
    Positivity(String),

    #[error("blow-down: profile reached zero at r = {0}")]
    BlowDown(f64),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("{0}")]
    Selection(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("dimension outside theorem range 3..5 (got {0})")]
    Dimension(usize),

    #[error("snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

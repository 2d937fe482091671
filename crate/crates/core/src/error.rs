use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the solver toolkit.
///
/// Variants are grouped by origin: argument validation, numerical breakdown
/// inside a routine, and statistical preconditions on sampled data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("h(x) vanishes at x = {x}; memory coefficients are singular there")]
    SingularPoint { x: f64 },

    #[error("Cholesky factorisation of the FGN covariance failed (H = {hurst}, n_steps = {n_steps})")]
    Cholesky { hurst: f64, n_steps: usize },

    #[error("{divergent} of {total} Monte Carlo paths diverged")]
    Divergence { divergent: usize, total: usize },

    #[error("insufficient samples: {0}")]
    Samples(String),

    #[error("stability violation ({constraint}): dt = {dt:e} exceeds limit {limit:e}")]
    Stability {
        constraint: &'static str,
        dt: f64,
        limit: f64,
    },

    #[error("density became negative ({value:e}) at node {node}, t = {t}")]
    Negativity { value: f64, node: usize, t: f64 },

    #[error("accuracy target {target:e} not reached (estimate {achieved:e})")]
    Accuracy { achieved: f64, target: f64 },

    #[error("series or continued fraction failed to converge: {0}")]
    Convergence(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("kernel mode refused: {0}")]
    KernelRefused(String),

    #[error("kernel history: {0}")]
    History(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity that must be real or non-negative came out otherwise by
    /// more than rounding allows.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("propagation aborted at t = {time}: {cause}")]
    Aborted {
        time: f64,
        cause: Box<Error>,
        partial: Box<crate::dynamics::TrajectoryRecord>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised by the spectral toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite {which} coefficient at index {index}")]
    NonFiniteCoefficient { which: &'static str, index: usize },

    #[error("point {x} lies outside the domain [0, {len}]")]
    Domain { x: f64, len: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("{0} is not an eigenvalue (boundary residual {1:.3e})")]
    NotAnEigenvalue(f64, f64),

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("degenerate value: {0}")]
    Degenerate(String),

    #[error("spectrum table rejected: {0}")]
    Invariant(String),

    #[error("inconsistent spectral data: {0}")]
    Inconsistent(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("jacobian is ill-conditioned (condition estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("inverse solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

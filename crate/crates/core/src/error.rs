use thiserror::Error;

/// Errors raised by grid construction, assembly, propagation and oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index component {component} out of range [0, {limit})")]
    Index { component: usize, limit: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("budget exceeded: {what} needs {required}, limit is {limit}")]
    Budget {
        what: &'static str,
        required: usize,
        limit: usize,
    },

    #[error("mollifier under-resolved: width {width} is below two cells ({min})")]
    UnderResolved { width: f64, min: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("CFL condition violated: lambda * sum of speeds = {load} > 1")]
    Stability { load: f64 },

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("no convergence before the caustic: {0}")]
    Caustic(String),

    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("internal invariant broken: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::SizeMismatch { expected, actual })
    }
}

//! Error type shared by all modules.

use thiserror::Error;

/// Everything that can go wrong when building samples, evaluating
/// statistics, or running experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A constructor or operation received an out-of-range parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sample was empty where at least one observation is required.
    #[error("empty sample")]
    EmptySample,

    /// Data ingestion failed (bad number, empty line, wrong shape).
    /// `line` is 1-based.
    #[error("ingestion error at line {line}: {message}")]
    Ingestion { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

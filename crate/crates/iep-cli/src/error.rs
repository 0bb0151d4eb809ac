//! CLI error type carrying the process exit code.
//!
//! Three failure classes map onto three nonzero exit codes:
//!
//! * `Usage` (1): bad flags, bad parameter values, invalid requests.
//! * `Data` (2): unreadable or malformed input files, degenerate samples.
//! * `Internal` (3): failures that are not the caller's fault (output I/O,
//!   serialization, thread-pool setup).

use std::fmt;

use iep_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Map a core error from a *computation* (not ingestion) to a usage error:
/// by that point the inputs were readable, so the failure is an invalid
/// request (bad replicate count, bad exponent, sample too small, ...).
pub fn usage(err: CoreError) -> CliError {
    CliError::Usage(err.to_string())
}

/// Map a core error raised while ingesting `path` to a data error, with
/// file and (when known) line context.
pub fn data_in(path: &str, err: CoreError) -> CliError {
    match err {
        CoreError::Ingestion { line, message } => CliError::Data(format!("{path}:{line}: {message}")),
        other => CliError::Data(format!("{path}: {other}")),
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

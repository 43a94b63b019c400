//! Crate-wide error type and the CLI exit-code mapping.
//!
//! User-facing failures (bad files, infeasible budgets, capacity guards,
//! diverged training) are reported through [`Error`]. Internal shape
//! contracts between matrices are programmer errors and are enforced with
//! assertions instead.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed content in a text file; `line` is 1-based (0 = whole file).
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    /// A selection budget cannot accommodate a structurally required set.
    #[error("budget too small: requires {required}, have {available}")]
    Budget { required: usize, available: usize },

    /// A guard against blowing up memory or enumeration time at desk scale.
    #[error("{what} needs {required} {unit} (limit {limit})")]
    Capacity {
        what: String,
        required: u128,
        limit: u128,
        unit: &'static str,
    },

    #[error("non-finite {0}")]
    NonFinite(String),

    /// Contradictory label observations: the offending point closes an odd
    /// cycle through the listed previously-accepted points.
    #[error("inconsistent observations: point {point} closes an odd cycle through points {cycle:?}")]
    Inconsistent { point: usize, cycle: Vec<usize> },
}

impl Error {
    /// Process exit code used by the CLI: validation and load problems exit
    /// with 2, capacity guards with 3, anything else with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingFile(_)
            | Error::Io { .. }
            | Error::Parse { .. }
            | Error::Invalid(_)
            | Error::Budget { .. }
            | Error::Inconsistent { .. } => 2,
            Error::Capacity { .. } => 3,
            Error::NonFinite(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

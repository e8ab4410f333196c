use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} variables, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported number of variables {0} (must be between 1 and 128)")]
    UnsupportedWidth(usize),

    #[error("operators are not independent over GF(2)")]
    DependentOperators,

    #[error("matrix is singular mod 2")]
    SingularMatrix,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dataset contains no observations")]
    EmptyDataset,

    #[error("{what} is {value}, above the configured cap of {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("counts sum to {found}, expected {expected}")]
    CountMismatch { expected: u64, found: u64 },

    #[error("invalid model structure: {0}")]
    InvalidStructure(String),

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("boundary model: probability of pattern {pattern} is zero, couplings diverge")]
    BoundaryModel { pattern: usize },

    #[error("invalid report: {0}")]
    InvalidReport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by a configured size cap rather than bad input.
    pub fn is_cap_violation(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

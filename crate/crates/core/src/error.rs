use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the targeting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("band count must be 4, got {0}")]
    BandCount(usize),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("malformed PGM: {0}")]
    Pgm(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("threshold out of range: {0}")]
    ThresholdOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("scene {0} has no ground-truth label")]
    MissingLabel(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("model document: {0}")]
    ModelFormat(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// A stage broke its output contract (e.g. a planner emitted an
    /// out-of-frame waypoint).
    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 3 for contract violations, 2 for
    /// every input validation failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

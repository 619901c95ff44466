use std::path::PathBuf;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("position is outside the support of the target")]
    OutOfSupport,

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not positive definite even after jitter")]
    NotPositiveDefinite,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("malformed rows at lines {lines:?}: {reason}")]
    MalformedRows { lines: Vec<u64>, reason: String },

    #[error("non-binary label {value:?} at line {line}")]
    NonBinaryLabel { line: u64, value: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("missing timings for chain `{0}`")]
    MissingTimings(String),

    #[error("unsupported net format: {0}")]
    NetFormat(String),

    #[error("refusing to write into non-empty run directory {0}")]
    RunDirExists(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<R, E = Error> = std::result::Result<R, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

use thiserror::Error;

/// Errors raised by the model pipeline.
///
/// Variants split into input problems (bad files, bad arguments) and
/// numerical failures so callers can map them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("duplicate match_id `{0}`")]
    DuplicateMatch(String),

    #[error("event references unknown match_id `{0}`")]
    UnknownMatch(String),

    #[error("unknown event kind `{0}`")]
    UnknownEvent(String),

    #[error("invalid outcome {0}; expected -1, 0 or 1")]
    InvalidOutcome(i64),

    #[error("invalid minute {minute} for half {half}")]
    InvalidMinute { minute: i64, half: i64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotPositiveDefinite { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

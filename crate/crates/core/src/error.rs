//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by matrix construction, I/O, solver setup, and training.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix violates a structural requirement of the operation.
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// A scalar argument is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Malformed Matrix Market content; the line number is 1-based.
    #[error("{path}:{line}: {message}")]
    MatrixMarket {
        path: String,
        line: usize,
        message: String,
    },

    /// Underlying file-system failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Malformed CSV content; the line number is 1-based.
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },

    /// Malformed JSON document; `offset` is the byte position of the failure.
    #[error("{path}: parse error at byte {offset}: {message}")]
    Json {
        path: String,
        offset: usize,
        message: String,
    },

    /// The coarsest-level matrix could not be factorized.
    #[error("singular coarse matrix at level {level}")]
    SingularCoarse { level: usize },

    /// A forward pass produced a non-finite value.
    #[error("non-finite value after layer {layer}")]
    NonFinite { layer: usize },

    /// The training loss became non-finite.
    #[error("training diverged at epoch {epoch}, batch {batch}")]
    TrainingDiverged { epoch: usize, batch: usize },

    /// A stored model was produced by an incompatible feature extractor.
    #[error("feature fingerprint mismatch: model has {found:?}, expected {expected:?}")]
    FingerprintMismatch { found: String, expected: String },
}

impl Error {
    /// Converts a JSON parse failure into [`Error::Json`], translating the
    /// parser's line/column position into a byte offset within `text`.
    pub(crate) fn from_json(path: &str, text: &str, err: &serde_json::Error) -> Error {
        let (line, column) = (err.line(), err.column());
        let offset = if line == 0 {
            0
        } else {
            text.split_inclusive('\n')
                .take(line - 1)
                .map(str::len)
                .sum::<usize>()
                + column.saturating_sub(1)
        };
        Error::Json {
            path: path.to_string(),
            offset,
            message: err.to_string(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by segmentation, fitting and file I/O.
#[derive(Debug, Error)]
pub enum SegError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("basis count {k} exceeds block area {area}")]
    TooManyBases { k: usize, area: usize },

    #[error("block {w}x{h} exceeds basis block size {n}")]
    BlockTooLarge { w: usize, h: usize, n: usize },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    /// The square sample system is singular or its condition estimate is too large.
    #[error("singular sample system (condition estimate {condition:e})")]
    SingularSample { condition: f64 },

    #[error("block has {pixels} pixels, need at least {required} to sample")]
    TooFewPixels { pixels: usize, required: usize },

    #[error("no non-degenerate sample found in {draws} draws")]
    DegenerateSampling { draws: usize },

    #[error("synthetic spec error: {0}")]
    InvalidSynthSpec(String),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt image file: {0}")]
    CorruptFile(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("thread pool: {0}")]
    ThreadPool(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SegError>;

impl SegError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SegError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn mismatch(expected: impl ToString, actual: impl ToString) -> Self {
        SegError::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

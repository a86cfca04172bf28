use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MosaicError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MosaicError {
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Every violation found while validating a config, not just the first.
    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("malformed scene: {0}")]
    Structural(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("image dimensions differ: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("undefined on empty input: {0}")]
    Empty(String),

    #[error("png: {0}")]
    Png(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = VqError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum VqError {
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("projected vector {row} has zero norm")]
    ZeroNorm { row: usize },

    #[error("non-finite {what} at epoch {epoch}, step {step}")]
    NonFinite {
        what: String,
        epoch: usize,
        step: usize,
    },

    #[error("config {path}:{line}: {msg}")]
    Config {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl VqError {
    pub(crate) fn dims(op: &'static str, detail: impl Into<String>) -> Self {
        VqError::DimensionMismatch {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        VqError::Io {
            path: path.into(),
            source,
        }
    }
}

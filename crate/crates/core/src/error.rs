use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate document id {0:?}")]
    DuplicateId(String),

    #[error("document {0:?} has no labels")]
    EmptyLabels(String),

    #[error("invalid label mapping: {0}")]
    Mapping(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("all documents are empty; cannot fit a vocabulary")]
    EmptyVocabulary,

    #[error("split would leave an empty side ({0})")]
    EmptySplit(String),

    #[error("truncated SVD did not converge after {iterations} iterations (max relative change {change:.3e}, max residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        change: f64,
        residual: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged (loss is NaN at epoch {epoch}); try a smaller learning rate")]
    Diverged { epoch: usize },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

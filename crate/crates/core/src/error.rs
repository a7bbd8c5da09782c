//! Error type shared by every stage of the pipeline.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FcsnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FcsnError {
    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("contour is degenerate: {0}")]
    DegenerateContour(String),

    #[error("{points} samples cannot resolve harmonics up to |n| = {k} (need at least {need})", need = 2 * .k + 1)]
    NyquistViolation { points: usize, k: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite loss in batch {batch} of epoch {epoch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("shape generator exceeded {0} rejection attempts")]
    RejectionLimit(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl FcsnError {
    /// Domain errors map to exit status 2, I/O and format problems to 1.
    pub fn is_domain(&self) -> bool {
        !matches!(self, FcsnError::Io { .. } | FcsnError::Format { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FcsnError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        FcsnError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

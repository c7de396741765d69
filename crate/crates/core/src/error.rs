use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameter; `path` names the offending key.
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("spectral index {index} is outside the plan (truncation {truncation})")]
    Index { index: String, truncation: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("operation `{operation}` is not supported on the {geometry}")]
    UnsupportedGeometry {
        operation: &'static str,
        geometry: &'static str,
    },

    #[error("non-finite state detected at t = {t}")]
    Divergence { t: f64 },

    #[error("degenerate tangent ensemble: scale factor {value:e} for vector {vector}")]
    DegenerateEnsemble { vector: usize, value: f64 },

    #[error("corrupt snapshot {path:?}: {reason}")]
    CorruptSnapshot { path: PathBuf, reason: String },

    #[error("snapshot does not match the requested plan: {reason}")]
    SnapshotMismatch { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

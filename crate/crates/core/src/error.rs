use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node index {index} outside ring of {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("edge distance undefined for self-pair ({0}, {0})")]
    SelfDistance(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("value {0} outside the unit interval")]
    OutOfUnitInterval(f64),

    #[error("empty observation window")]
    EmptyWindow,

    #[error("parse error in {context}, line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("corrupted checkpoint at {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numerical integration itself, as opposed to
    /// configuration or I/O problems.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Integration { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

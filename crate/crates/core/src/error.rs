use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or dimensions that do not conform.
    #[error("configuration error: {0}")]
    Config(String),

    /// An API called in the wrong state (non-scalar loss, missing gradients, empty input).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid distribution: {0}")]
    Validation(String),

    #[error("schema error in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 4,
            Error::Divergence(_) => 3,
            _ => 2,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller handed in data that violates an operation's preconditions.
    #[error("invalid input: {0}")]
    Input(String),

    /// A file or document does not follow its expected layout.
    #[error("format error: {0}")]
    Format(String),

    /// Scenario, model or training configuration cannot be realized.
    #[error("config error: {0}")]
    Config(String),

    /// A partition plan does not belong to the dataset it is used with.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// A loss, gradient or parameter became non-finite.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

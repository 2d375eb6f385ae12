use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shape mismatch, non-finite value, out-of-range label and the like.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A network, noise model or trainer could not be built from its parameters.
    #[error("construction error: {0}")]
    Construction(String),

    #[error("config error: {0}")]
    Config(String),

    /// Dataset file is malformed. `field` names the offending part of the file.
    #[error("failed to load {path}: {field}: {reason}")]
    Load {
        path: PathBuf,
        field: &'static str,
        reason: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("output error: {0}")]
    Output(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

//! Crate-wide error type.

use thiserror::Error;

/// Error type covering every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or argument values supplied by the caller.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data is malformed, inconsistent, or out of the supported domain.
    #[error("invalid data: {0}")]
    Data(String),

    /// A binary file failed structural validation. `offset` is the byte
    /// position at which the problem was detected.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    /// A numeric computation failed (divergence, non-finite values).
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn parse(offset: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }

    /// Process exit code for command-line consumers: 2 for configuration
    /// errors, 3 for data/file problems, 4 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Parse { .. } | Error::Io(_) => 3,
            Error::Numeric(_) => 4,
        }
    }
}

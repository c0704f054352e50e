use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Rejected input: malformed configuration, bad CLI arguments, empty grids.
    #[error("validation error: {0}")]
    Validation(String),

    /// An operation was called outside its contract (dimension mismatch,
    /// unknown qubit, precondition such as `PVP = 0` violated).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical invariant failed at runtime (norm drift, step underflow,
    /// hermiticity residual).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Serde(_) => 2,
            Error::Contract(_) | Error::Numerical(_) => 3,
            Error::Io { .. } => 4,
        }
    }
}

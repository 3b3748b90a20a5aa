use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// The file exists but its contents do not follow the format.
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    /// A truncated or overlong binary payload.
    #[error("{path}: expected {expected} bytes, found {actual}")]
    Length {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    #[error("{0}")]
    Usage(String),

    /// A solve missed its tolerance; the message says which one.
    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error(transparent)]
    Core(#[from] pcadepth_core::Error),
}

impl Error {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: &Path, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    /// Process exit status: 1 usage, 2 data or format, 3 convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Core(pcadepth_core::Error::Config(_)) => 1,
            Error::NotConverged(_) | Error::Core(pcadepth_core::Error::NotConverged { .. }) => 3,
            _ => 2,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

use crate::exprtree::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or argument; detected before any search starts.
    #[error("config: {0}")]
    Config(String),

    /// Malformed or out-of-range input data.
    #[error("data: {0}")]
    Data(String),

    #[error("data: {path}:{line}: {message}")]
    DataRow {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("parse: {0}")]
    Parse(#[from] ParseError),

    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A contract the library itself is supposed to uphold was broken.
    #[error("invariant: {0}")]
    Invariant(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable kind tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Data(_) | Error::DataRow { .. } => "data",
            Error::Parse(_) => "parse",
            Error::Io { .. } => "io",
            Error::Invariant(_) => "invariant",
        }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Data(_) | Error::DataRow { .. } | Error::Parse(_) | Error::Io { .. } => 2,
            Error::Invariant(_) => 3,
        }
    }
}

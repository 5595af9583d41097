use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by corpus, embedding, kernel and SVM operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("i/o error")]
    Stream(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate sentence id {id:?}")]
    DuplicateId { line: usize, id: String },

    #[error("line {line}: aspect index {index} out of range for {len} tokens")]
    AspectOutOfRange {
        line: usize,
        index: usize,
        len: usize,
    },

    #[error("line {line}: expected {expected} vector components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fingerprint mismatch: expected {expected:?}, found {found:?}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("malformed {kind} data: {message}")]
    Format { kind: &'static str, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn format(kind: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            kind,
            message: message.into(),
        }
    }
}

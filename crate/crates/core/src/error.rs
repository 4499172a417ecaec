use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (width
    /// mismatch, out-of-range basis label, wrong table length, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value is out of its permitted range.
    #[error("configuration error: {0}")]
    Config(String),

    /// An input violates an operation's stated precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A protocol measurement landed outside both verdict bands, meaning
    /// the oracle was not of the promised form.
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    /// The request lies outside the range an exhaustive procedure supports.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A toy machine transition table is malformed.
    #[error("malformed machine: {0}")]
    Machine(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}:{line}:{column}: {message}")]
    Parse {
        context: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

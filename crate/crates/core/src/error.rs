use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("node index {index} out of range for graph with {len} nodes")]
    Index { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected} nodes, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{}line {line}: {message}", path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        message: String,
    },

    #[error("malformed input: {0}")]
    Format(String),

    /// Configuration that parses but cannot be executed, e.g. an epidemic
    /// that never reaches the requested size.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed or mismatched input data, as
    /// opposed to runtime or configuration failures.
    pub fn is_input_format(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Format(_) | Error::Dimension { .. }
        )
    }
}

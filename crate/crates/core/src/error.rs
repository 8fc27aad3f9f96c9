//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// A single malformed row found while reading a CSV input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the source file (the header is line 1).
    pub line: u64,
    /// Column the problem was detected in, when it can be attributed to one.
    pub column: Option<String>,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.column {
            Some(col) => write!(f, "line {}: column `{}`: {}", self.line, col, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("cannot encode field `{field}`: unknown level `{value}`")]
    Encoding { field: String, value: String },

    #[error("schema error in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("{} malformed row(s) in {}: {}", .errors.len(), .path.display(), summarize_rows(.errors))]
    Rows { path: PathBuf, errors: Vec<RowError> },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

fn summarize_rows(errors: &[RowError]) -> String {
    const SHOWN: usize = 5;
    let mut parts: Vec<String> = errors.iter().take(SHOWN).map(|e| e.to_string()).collect();
    if errors.len() > SHOWN {
        parts.push(format!("... and {} more", errors.len() - SHOWN));
    }
    parts.join("; ")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// I/O failures keep their cause; anything else is a malformed file.
    pub(crate) fn csv(path: impl Into<PathBuf>, e: csv::Error) -> Self {
        let path = path.into();
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Schema {
                path,
                message: format!("{other:?}"),
            },
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

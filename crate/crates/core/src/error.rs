use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("line {line}: expected {expected} coordinates, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("input contains no embedding rows")]
    EmptyInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("degenerate triangle: {0}")]
    DegenerateTriangle(String),

    #[error("every sampled triangle for vertex {vertex} ({token}) was degenerate")]
    DegenerateVertex { vertex: usize, token: String },

    #[error("{path}: {source}")]
    Open { path: String, source: io::Error },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short name used as the CLI error prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedInput(_) => "malformed-input",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::Parse { .. } => "parse",
            Error::EmptyInput => "empty-input",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Numeric(_) => "numeric",
            Error::DegenerateTriangle(_) => "degenerate-triangle",
            Error::DegenerateVertex { .. } => "numeric-degeneracy",
            Error::Open { .. } | Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn open(path: &std::path::Path, source: io::Error) -> Self {
        Error::Open {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure categories; the CLI maps each to an exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("alignment error: {what} ({left} vs {right})")]
    Alignment {
        what: String,
        left: usize,
        right: usize,
    },

    #[error("alignment error at item {index}: {left:?} vs {right:?}")]
    Misaligned {
        index: usize,
        left: String,
        right: String,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: morphs [{morphs}] do not concatenate to surface form {surface:?}")]
    SurfaceMismatch {
        line: usize,
        surface: String,
        morphs: String,
    },

    #[error("format error at line {line}, column {column}: {message}")]
    Format {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported segmentation mode: {0}")]
    UnsupportedMode(String),

    #[error("data error at item {index}: {message}")]
    Data { index: usize, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
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
}

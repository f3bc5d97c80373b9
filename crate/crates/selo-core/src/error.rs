use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. The CLI maps variants onto exit codes, so keep the
/// classification stable: argument misuse, bad data, and numeric failures are
/// distinct categories.
#[derive(Debug, Error)]
pub enum SeloError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SeloError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SeloError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, SeloError>;

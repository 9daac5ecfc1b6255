//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{0} must not be empty")]
    EmptyInput(&'static str),

    #[error("invalid value for {what}: {value}")]
    InvalidValue { what: String, value: f64 },

    #[error("invalid config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("data error at {path}, row {row}: {message}")]
    DataRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("data error in {path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("class labels of model and data do not match: {message}")]
    ClassMismatch { message: String },

    #[error(
        "degenerate partition: set1 has {set1} samples, set2 has {set2}; \
         child training needs both non-empty"
    )]
    DegeneratePartition { set1: usize, set2: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("model file error: {0}")]
    ModelFormat(String),
}

impl Error {
    /// Process exit code for the CLI: 1 usage/config, 2 data, 3 degenerate partition.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegeneratePartition { .. } => 3,
            Error::DataRow { .. } | Error::Data { .. } | Error::ClassMismatch { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

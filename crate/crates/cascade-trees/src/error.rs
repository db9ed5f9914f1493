//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset handling, training, prediction, and reporting.
#[derive(Debug, Error)]
pub enum Error {
    /// I/O failure while reading or writing a file.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A CSV cell or row that could not be interpreted. `line` is 1-based
    /// and counts the header row if present.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Invalid configuration: bad parameter values, mismatched fold splits,
    /// unknown label columns.
    #[error("{0}")]
    Config(String),

    /// A dataset with no data rows.
    #[error("dataset has no data rows")]
    EmptyDataset,

    /// An operation applied outside its domain (empty training set, empty
    /// leaf, feature index out of range, ...).
    #[error("{0}")]
    Domain(String),

    /// A missing feature value was encountered where a concrete value is
    /// required. Tolerant cascade prediction handles this case; everything
    /// else reports it.
    #[error("missing value for feature {feature} ({context})")]
    MissingValue { feature: usize, context: String },

    /// A request whose exhaustive search space exceeds the configured cap.
    #[error("{0}")]
    Resource(String),

    /// A model file that could not be decoded or has an unsupported version.
    #[error("model file: {0}")]
    ModelFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;

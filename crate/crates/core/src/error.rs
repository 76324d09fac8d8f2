//! Error type shared across the crate.

use thiserror::Error;

/// Library error, grouped by category.
///
/// The category names are stable: the CLI reports failures as
/// `error:<category>:<message>` and scripts match on the prefix.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor/layer dimension mismatch.
    #[error("{0}")]
    Shape(String),
    /// Operation called in an invalid order (e.g. backward before forward).
    #[error("{0}")]
    State(String),
    /// Out-of-range index.
    #[error("{0}")]
    Index(String),
    /// Invalid configuration (hyperparameters, geometry).
    #[error("{0}")]
    Config(String),
    /// Dataset does not satisfy what the operation needs (missing labels, empty class).
    #[error("{0}")]
    Data(String),
    /// Corrupt or incompatible model file.
    #[error("{0}")]
    Format(String),
    /// Malformed text input (dataset CSV, config file).
    #[error("{0}")]
    Parse(String),
    /// Train/test partitioning cannot be performed as requested.
    #[error("{0}")]
    Split(String),
    /// Singular linear system.
    #[error("{0}")]
    Rank(String),
    /// Invalid command-line usage.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn category(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::State(_) => "state",
            Error::Index(_) => "index",
            Error::Config(_) => "config",
            Error::Data(_) => "data",
            Error::Format(_) => "format",
            Error::Parse(_) => "parse",
            Error::Split(_) => "split",
            Error::Rank(_) => "rank",
            Error::Usage(_) => "usage",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

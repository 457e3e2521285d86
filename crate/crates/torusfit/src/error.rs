use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument or parameter lies outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A compass label that is not one of the sixteen rose directions.
    #[error("unknown compass label {0:?}")]
    UnknownLabel(String),
    /// Malformed input data, with the 1-based line it was found on.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// A covariance structure too close to singular to invert.
    #[error("singular structure: {0}")]
    Singular(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

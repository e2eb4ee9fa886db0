//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration, parameters, or input data.
    #[error("validation error: {0}")]
    Validation(String),

    /// The sampler could not be started or produced no usable state.
    #[error("sampler error: {0}")]
    Sampler(String),

    /// A numerical procedure failed (overflow, impossible inversion, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad inputs rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Sampler(_) | Error::Numerical(_))
    }
}

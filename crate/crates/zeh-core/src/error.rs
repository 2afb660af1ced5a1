//! Error type shared across the crate.

/// Anything that can go wrong while building scenarios or solving.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A tariff failed validation; the message names the violated rule.
    #[error("invalid tariff: {0}")]
    Tariff(String),
    /// Malformed inputs: shape mismatches, negative decisions, bad ranges.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Historical data problems: gaps, coverage, duplicate records.
    #[error("insufficient data: {0}")]
    Data(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Solver breakdown, e.g. a non-finite objective; carries diagnostics.
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}

//! Command-line front end for the investment planner: config parsing, data
//! ingestion, mode dispatch, and machine-readable reports.

pub mod config;
pub mod epigraph;
pub mod pipeline;
pub mod report;

/// CLI-level failure, classified for the exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments (exit code 2).
    Config(String),
    /// Missing or malformed data (exit code 3).
    Data(String),
    /// A solve failed (exit code 4).
    Solver(String),
    /// Filesystem trouble (exit code 5).
    Io(String),
}

impl CliError {
    /// The documented process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub(crate) fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<zeh_core::Error> for CliError {
    fn from(err: zeh_core::Error) -> Self {
        match err {
            zeh_core::Error::Tariff(m) | zeh_core::Error::Invalid(m) => CliError::Config(m),
            zeh_core::Error::Data(m) => CliError::Data(m),
            zeh_core::Error::Csv(e) => CliError::Data(e.to_string()),
            zeh_core::Error::Io(e) => CliError::Io(e.to_string()),
            zeh_core::Error::Solver(m) => CliError::Solver(m),
        }
    }
}

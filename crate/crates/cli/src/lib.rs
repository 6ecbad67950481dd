//! Experiment runner: configuration, run orchestration, neck reports, invariant
//! suites, plots and sweeps.

pub mod commands;
pub mod config;
pub mod io;
pub mod plot;
pub mod verify;

pub use config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] neckflow_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("usage error: {0}")]
    Usage(String),
}

impl CliError {
    /// Process exit code: 2 for configuration and usage problems, 4 for inputs the
    /// neck analysis refuses, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Core(neckflow_core::Error::NotDegenerate { .. })
            | CliError::Core(neckflow_core::Error::ConcentrationPresent { .. }) => 4,
            _ => 1,
        }
    }
}

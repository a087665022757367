//! Batch front-end: analytic curves, simulations, sweeps and self checks.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid or unreadable configuration; the message names the field.
    #[error("{0}")]
    Config(String),
    #[error("validation failed: {0} check(s)")]
    Validation(usize),
    #[error("{0}")]
    Run(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Run(_) | CliError::Io(_) => 1,
        })
    }
}

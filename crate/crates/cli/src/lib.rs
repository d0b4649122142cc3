//! Configuration, orchestration and file output for the `qhd` binary.

pub mod check;
pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

pub use commands::{cmd_check, cmd_simulate, cmd_sweep, RunOutcome, SweepOutcome};
pub use config::{parse_config, parse_config_str, Config, ConfigError, RunConfig, SweepConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error:\n{0}")]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("run failed: {0}")]
    Run(#[from] qhd_core::Error),
    #[error("sweep report failed: {0}")]
    ReportFailed(String),
    #[error("invariant check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    /// 1 for configuration and I/O problems, 2 for failed runs and reports.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Run(_) | CliError::ReportFailed(_) | CliError::CheckFailed(_) => 2,
        }
    }
}

//! Config parsing, report assembly and figure-data emission for the
//! `nearherm` binary.

pub mod app;
pub mod config;
pub mod emit;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Experiment(#[from] nearherm::Error),

    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for anything the user can fix in the config or environment, 1 for
    /// numerical failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Experiment(e) => match e {
                nearherm::Error::Config(_) | nearherm::Error::Precondition(_) | nearherm::Error::Domain(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

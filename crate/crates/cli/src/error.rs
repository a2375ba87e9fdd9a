use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced to the shell, each with a fixed exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("resource cap: {0}")]
    Resource(String),
    #[error("{0} property suite(s) failed")]
    SuiteFailure(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SuiteFailure(_) => 1,
            CliError::Io { .. } | CliError::Input(_) => 2,
            CliError::Resource(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<qcap_core::error::Error> for CliError {
    fn from(e: qcap_core::error::Error) -> Self {
        match e {
            qcap_core::error::Error::BudgetExceeded(msg) => CliError::Resource(msg),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("malformed document: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

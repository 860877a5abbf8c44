use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the bandit state, policies, and simulated environment.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BanditError {
    #[error("casino index {casino} out of range for {n_casinos} casinos")]
    CasinoIndex { casino: usize, n_casinos: usize },
    #[error("arm index {arm} out of range for casino {casino} with {n_arms} arms")]
    ArmIndex {
        casino: usize,
        arm: usize,
        n_arms: usize,
    },
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("missing truth data: {0}")]
    Data(String),
    #[error("arm pool exhausted in casino {casino} (pool size {pool_size}); raise the pool size or lower the budget")]
    PoolExhausted { casino: usize, pool_size: usize },
}

/// Errors raised while writing or reading experiment reports.
#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl ReportError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ReportError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        ReportError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

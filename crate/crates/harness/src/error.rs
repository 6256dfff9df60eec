use std::path::PathBuf;

use rbmle::{ConfigError, DatasetIoError, SolverError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error(transparent)]
    Dataset(#[from] DatasetIoError),
    #[error("policy `{policy}`, trial {trial}: {source}")]
    Solver {
        policy: String,
        trial: usize,
        #[source]
        source: SolverError,
    },
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }

    /// Process exit code: 2 configuration, 3 I/O, 4 solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Dataset(DatasetIoError::Config(_)) => 2,
            HarnessError::Io { .. } | HarnessError::Format { .. } | HarnessError::Dataset(_) => 3,
            HarnessError::Solver { .. } => 4,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

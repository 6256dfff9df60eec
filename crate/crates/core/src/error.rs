use std::path::PathBuf;

use thiserror::Error;

/// An invalid configuration value.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Newton iteration that did not reach the gradient tolerance.
#[derive(Debug, Clone, PartialEq, Error)]
#[error(
    "newton solver did not converge after {iterations} iterations (gradient norm {residual:e})"
)]
pub struct SolverError {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Error)]
pub enum DatasetIoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("unsupported dataset format version `{found}` (expected `{expected}`)")]
    UnsupportedVersion { found: String, expected: String },
    #[error("dataset table {path} is corrupt: {reason}")]
    Table { path: PathBuf, reason: String },
    #[error("dataset digest mismatch: manifest says {expected}, tables hash to {actual}")]
    DigestMismatch { expected: String, actual: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

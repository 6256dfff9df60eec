//! Experiment harness for the RBMLE bandit policies: dataset replay,
//! pseudo-regret recording, cross-trial statistics, timing benchmarks and
//! bound-coverage checks.

pub mod bench;
pub mod config;
pub mod coverage;
pub mod error;
pub mod output;
pub mod presets;
pub mod registry;
pub mod runner;
pub mod stats;

pub use config::{ExperimentConfig, PolicySpec};
pub use error::HarnessError;
pub use runner::{run_experiment, run_experiment_with, run_trial, DataSource, RunOptions};

//! Experiment configuration, read from TOML.
//!
//! ```toml
//! name = "fig2a"
//! arms = 10
//! dim = 3
//! horizon = 30000
//! trials = 50
//! theta_star = [-0.3, 0.5, 0.8]
//! context_mode = "static"        # or "time-varying"
//! seed = 46
//! record_stride = 100            # per-round records kept every n rounds
//!
//! [link]
//! kind = "identity"              # or "logistic"
//!
//! [schedules]
//! alpha = "sqrt-t"
//! eta = "one-plus-log"
//!
//! [bound]                        # optional coverage check
//! delta = 0.1
//!
//! [[policies]]
//! name = "lin-rbmle"
//! params = { lambda = 1.0 }
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rbmle::environment::{ContextMode, DataConfig, LinkFunction};
use rbmle::schedule::{BiasSchedule, EtaSchedule};
use rbmle::ConfigError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};
use crate::registry::PolicyFactory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub arms: usize,
    pub dim: usize,
    pub horizon: usize,
    pub trials: usize,
    pub theta_star: Vec<f64>,
    pub context_mode: ContextMode,
    #[serde(default = "LinkFunction::identity")]
    pub link: LinkFunction,
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub schedules: Schedules,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundSpec>,
    pub policies: Vec<PolicySpec>,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedules {
    #[serde(default)]
    pub alpha: BiasSchedule,
    #[serde(default)]
    pub eta: EtaSchedule,
}

/// Parameters of the high-probability bound checked against RBMLE runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSpec {
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_delta() -> f64 {
    0.1
}

fn default_sigma() -> f64 {
    1.0
}

impl Default for BoundSpec {
    fn default() -> Self {
        Self {
            delta: default_delta(),
            sigma: default_sigma(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "toml::Table::is_empty")]
    pub params: toml::Table,
}

impl PolicySpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: toml::Table::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<toml::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::new("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(HarnessError::io(path))?;
        let config = Self::from_toml(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("validated config serializes")
    }

    pub fn data_config(&self) -> DataConfig {
        DataConfig {
            arms: self.arms,
            dim: self.dim,
            horizon: self.horizon,
            trials: self.trials,
            theta_star: self.theta_star.clone(),
            context_mode: self.context_mode,
            link: self.link,
        }
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.data_config().validate()?;
        if self.seed > i64::MAX as u64 {
            return Err(ConfigError::new(
                "seed",
                "must fit in a signed 64-bit TOML integer",
            ));
        }
        if self.record_stride == 0 {
            return Err(ConfigError::new("record_stride", "must be at least 1"));
        }
        self.schedules.alpha.validate()?;
        self.schedules.eta.validate()?;
        if let Some(b) = &self.bound {
            if !(b.delta > 0.0 && b.delta < 1.0) {
                return Err(ConfigError::new("bound.delta", "must lie in (0, 1)"));
            }
            if !(b.sigma > 0.0 && b.sigma.is_finite()) {
                return Err(ConfigError::new("bound.sigma", "must be positive"));
            }
        }
        if self.policies.is_empty() {
            return Err(ConfigError::new(
                "policies",
                "at least one policy is required",
            ));
        }
        let mut seen = BTreeSet::new();
        for spec in &self.policies {
            if !seen.insert(spec.name.as_str()) {
                return Err(ConfigError::new(
                    "policies",
                    format!("`{}` is listed twice", spec.name),
                ));
            }
            PolicyFactory::parse(spec, self)?;
        }
        Ok(())
    }

    /// Parses every policy spec; call after [`validate`](Self::validate).
    pub fn factories(&self) -> Result<Vec<PolicyFactory>, ConfigError> {
        self.policies
            .iter()
            .map(|s| PolicyFactory::parse(s, self))
            .collect()
    }
}

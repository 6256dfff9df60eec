//! Time-dependent tuning schedules: the reward-bias weight `α(t)` and the
//! GLM score multiplier `η(t)`. Rounds are 1-based decision times.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Reward-bias weight `α(t)`: positive and nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BiasSchedule {
    /// `α(t) = √t`.
    #[default]
    SqrtT,
    /// `α(t) = table[t − 1]`, holding the last entry past the end.
    Table(Vec<f64>),
}

impl BiasSchedule {
    pub fn eval(&self, t: u64) -> f64 {
        debug_assert!(t >= 1);
        match self {
            BiasSchedule::SqrtT => (t as f64).sqrt(),
            BiasSchedule::Table(v) => {
                let i = (t.max(1) as usize - 1).min(v.len() - 1);
                v[i]
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let BiasSchedule::Table(v) = self {
            if v.is_empty() {
                return Err(ConfigError::new("alpha", "table is empty"));
            }
            if v.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                return Err(ConfigError::new(
                    "alpha",
                    "entries must be positive and finite",
                ));
            }
            if v.windows(2).any(|w| w[1] < w[0]) {
                return Err(ConfigError::new("alpha", "table must be nondecreasing"));
            }
        }
        Ok(())
    }
}

/// Score multiplier `η(t)`: positive, strictly increasing, unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EtaSchedule {
    /// `η(t) = 1 + log t`.
    #[default]
    OnePlusLog,
    /// `η(t) = offset + slope · log t`.
    AffineLog { offset: f64, slope: f64 },
}

impl EtaSchedule {
    pub fn eval(&self, t: u64) -> f64 {
        debug_assert!(t >= 1);
        let lt = (t as f64).ln();
        match self {
            EtaSchedule::OnePlusLog => 1.0 + lt,
            EtaSchedule::AffineLog { offset, slope } => offset + slope * lt,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let EtaSchedule::AffineLog { offset, slope } = self {
            if !(*offset > 0.0) {
                return Err(ConfigError::new("eta.offset", "must be positive"));
            }
            if !(*slope > 0.0) {
                return Err(ConfigError::new("eta.slope", "must be positive"));
            }
        }
        Ok(())
    }
}

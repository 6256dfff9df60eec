//! Pre-materialized synthetic datasets.
//!
//! Every reward for every arm at every round is drawn up front, so a policy's
//! choice only selects which of the stored values it gets to see. Two
//! policies replaying the same [`TrialData`] therefore observe identical
//! rewards whenever they pull the same arm at the same round.
//!
//! Draw order within a trial stream (part of the file-format contract):
//! - static contexts: the `K` contexts first (arm order, `d` normals each),
//!   then for each round `t = 1..=T` the `K` reward noises in arm order;
//! - time-varying contexts: for each round, the `K` contexts, then the `K`
//!   reward noises.
//!
//! Each context is `sqrt(10)·z` for a standard normal `z ∈ ℝᵈ`, divided by
//! its ℓ₂ norm.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::link::LinkFunction;
use super::rng::{data_stream_seed, StreamRng};
use crate::error::ConfigError;

/// Variance of the raw Gaussian contexts before normalization.
pub const CONTEXT_VARIANCE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextMode {
    /// One context per arm, fixed for the whole trial.
    Static,
    /// Fresh contexts every round.
    TimeVarying,
}

/// Everything that determines a dataset besides the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    /// Number of arms `K`.
    pub arms: usize,
    /// Context dimension `d`.
    pub dim: usize,
    /// Rounds per trial `T`.
    pub horizon: usize,
    pub trials: usize,
    pub theta_star: Vec<f64>,
    pub context_mode: ContextMode,
    pub link: LinkFunction,
}

impl DataConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.arms < 2 {
            return Err(ConfigError::new("arms", "need at least 2 arms"));
        }
        if self.dim < 1 {
            return Err(ConfigError::new("dim", "must be at least 1"));
        }
        if self.horizon < 1 {
            return Err(ConfigError::new("horizon", "must be at least 1"));
        }
        if self.trials < 1 {
            return Err(ConfigError::new("trials", "must be at least 1"));
        }
        if self.theta_star.len() != self.dim {
            return Err(ConfigError::new(
                "theta_star",
                format!(
                    "has {} components, dim is {}",
                    self.theta_star.len(),
                    self.dim
                ),
            ));
        }
        if self.theta_star.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::new("theta_star", "components must be finite"));
        }
        let norm = norm2(&self.theta_star);
        if norm > 1.0 + 1e-12 {
            return Err(ConfigError::new(
                "theta_star",
                format!("l2 norm {norm} exceeds 1"),
            ));
        }
        if !(self.link.clamp_radius > 0.0) {
            return Err(ConfigError::new("link.clamp_radius", "must be positive"));
        }
        Ok(())
    }
}

/// The `K` context vectors revealed at one round, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextSet {
    dim: usize,
    data: Vec<f64>,
}

impl ContextSet {
    /// Builds a set from `K` rows of length `dim`. No normalization is applied.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == dim), "ragged context rows");
        Self {
            dim,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim));
        Self { dim, data }
    }

    pub fn arms(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arm(&self, a: usize) -> &[f64] {
        &self.data[a * self.dim..(a + 1) * self.dim]
    }

    /// All contexts, row-major `K × d`.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    fn draw(rng: &mut StreamRng, arms: usize, dim: usize) -> Self {
        let scale = CONTEXT_VARIANCE.sqrt();
        let mut data = Vec::with_capacity(arms * dim);
        for _ in 0..arms {
            loop {
                let raw: Vec<f64> = (0..dim).map(|_| scale * rng.standard_normal()).collect();
                let n = norm2(&raw);
                if n > 0.0 {
                    data.extend(raw.iter().map(|v| v / n));
                    break;
                }
            }
        }
        Self { dim, data }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ContextStore {
    Static(ContextSet),
    TimeVarying(Vec<ContextSet>),
}

/// Contexts and realized rewards of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialData {
    index: usize,
    arms: usize,
    horizon: usize,
    contexts: ContextStore,
    // rewards[(t - 1) * arms + a]
    rewards: Vec<f64>,
}

impl TrialData {
    pub(crate) fn from_parts(
        index: usize,
        arms: usize,
        horizon: usize,
        contexts: Vec<ContextSet>,
        rewards: Vec<f64>,
        mode: ContextMode,
    ) -> Self {
        let contexts = match mode {
            ContextMode::Static => ContextStore::Static(contexts.into_iter().next().unwrap()),
            ContextMode::TimeVarying => ContextStore::TimeVarying(contexts),
        };
        Self {
            index,
            arms,
            horizon,
            contexts,
            rewards,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        match &self.contexts {
            ContextStore::Static(c) => c.dim(),
            ContextStore::TimeVarying(v) => v[0].dim(),
        }
    }

    /// Contexts revealed at round `t` (1-based).
    pub fn contexts(&self, t: usize) -> &ContextSet {
        assert!((1..=self.horizon).contains(&t), "round {t} out of range");
        match &self.contexts {
            ContextStore::Static(c) => c,
            ContextStore::TimeVarying(v) => &v[t - 1],
        }
    }

    /// Realized reward of arm `a` at round `t` (1-based).
    pub fn reward(&self, t: usize, a: usize) -> f64 {
        assert!((1..=self.horizon).contains(&t) && a < self.arms);
        self.rewards[(t - 1) * self.arms + a]
    }

    /// Writes the trial table: one row per `(t, arm)` in round-major order,
    /// columns `t, arm, x_1..x_d, reward`, each a little-endian `f64`.
    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut row = Vec::with_capacity((self.dim() + 3) * 8);
        for t in 1..=self.horizon {
            let ctx = self.contexts(t);
            for a in 0..self.arms {
                row.clear();
                row.extend_from_slice(&(t as f64).to_le_bytes());
                row.extend_from_slice(&(a as f64).to_le_bytes());
                for v in ctx.arm(a) {
                    row.extend_from_slice(&v.to_le_bytes());
                }
                row.extend_from_slice(&self.reward(t, a).to_le_bytes());
                w.write_all(&row)?;
            }
        }
        Ok(())
    }
}

/// Generates trial `index` of the dataset defined by `(config, seed)`.
///
/// Trials are independent of each other, so they can be generated lazily or
/// in parallel without changing any value.
pub fn build_trial(config: &DataConfig, seed: u64, index: usize) -> TrialData {
    let mut rng = StreamRng::new(data_stream_seed(seed, index as u64));
    let (k, d, horizon) = (config.arms, config.dim, config.horizon);
    let mut rewards = Vec::with_capacity(horizon * k);
    let draw_rewards = |rng: &mut StreamRng, ctx: &ContextSet, rewards: &mut Vec<f64>| {
        for x in ctx.iter() {
            let mean = config.link.eval(dot(&config.theta_star, x));
            rewards.push(mean + rng.standard_normal());
        }
    };
    let contexts = match config.context_mode {
        ContextMode::Static => {
            let ctx = ContextSet::draw(&mut rng, k, d);
            for _ in 0..horizon {
                draw_rewards(&mut rng, &ctx, &mut rewards);
            }
            vec![ctx]
        }
        ContextMode::TimeVarying => {
            let mut all = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                let ctx = ContextSet::draw(&mut rng, k, d);
                draw_rewards(&mut rng, &ctx, &mut rewards);
                all.push(ctx);
            }
            all
        }
    };
    TrialData::from_parts(index, k, horizon, contexts, rewards, config.context_mode)
}

/// A fully materialized dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DataConfig,
    pub seed: u64,
    pub trials: Vec<TrialData>,
}

impl Dataset {
    /// Digest of the generating configuration and seed.
    pub fn config_hash(&self) -> String {
        config_hash(&self.config, self.seed)
    }

    /// SHA-256 over the per-trial table digests, in trial order.
    pub fn digest(&self) -> String {
        let mut h = DatasetHasher::default();
        for trial in &self.trials {
            h.push_digest(&trial_digest(trial));
        }
        h.finish()
    }
}

/// SHA-256 of one trial table.
pub fn trial_digest(trial: &TrialData) -> [u8; 32] {
    let mut buf = Vec::with_capacity(trial.horizon * trial.arms * (trial.dim() + 3) * 8);
    trial.write_table(&mut buf).expect("write to memory");
    Sha256::digest(&buf).into()
}

/// Incremental form of [`Dataset::digest`]. Trial digests can be computed
/// independently (and in parallel) and fed here in trial order.
#[derive(Default)]
pub struct DatasetHasher {
    hasher: Sha256,
}

impl DatasetHasher {
    pub fn push_digest(&mut self, trial_digest: &[u8; 32]) {
        self.hasher.update(trial_digest);
    }

    pub fn finish(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

/// SHA-256 of the canonical TOML rendering of `(config, seed)`.
pub fn config_hash(config: &DataConfig, seed: u64) -> String {
    #[derive(Serialize)]
    struct Keyed<'a> {
        seed: String,
        config: &'a DataConfig,
    }
    let text = toml::to_string(&Keyed {
        seed: seed.to_string(),
        config,
    })
    .expect("data config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn build_dataset(config: &DataConfig, seed: u64) -> Result<Dataset, ConfigError> {
    config.validate()?;
    let trials = (0..config.trials)
        .map(|i| build_trial(config, seed, i))
        .collect();
    Ok(Dataset {
        config: config.clone(),
        seed,
        trials,
    })
}

/// Lowest index attaining `max_a θ*ᵀx_a`.
pub fn optimal_arm(theta_star: &[f64], contexts: &ContextSet) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (a, x) in contexts.iter().enumerate() {
        let v = dot(theta_star, x);
        if v > best_val {
            best = a;
            best_val = v;
        }
    }
    best
}

/// `μ(θ*ᵀx*) − μ(θ*ᵀx_chosen)`.
pub fn pseudo_regret_step(
    theta_star: &[f64],
    link: &LinkFunction,
    contexts: &ContextSet,
    chosen: usize,
) -> f64 {
    let best = contexts.arm(optimal_arm(theta_star, contexts));
    let gap = link.eval(dot(theta_star, best)) - link.eval(dot(theta_star, contexts.arm(chosen)));
    gap.max(0.0)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(mode: ContextMode) -> DataConfig {
        DataConfig {
            arms: 4,
            dim: 3,
            horizon: 50,
            trials: 3,
            theta_star: vec![-0.3, 0.5, 0.8],
            context_mode: mode,
            link: LinkFunction::identity(),
        }
    }

    #[test]
    fn contexts_are_unit_norm() {
        for mode in [ContextMode::Static, ContextMode::TimeVarying] {
            let ds = build_dataset(&config(mode), 46).unwrap();
            for trial in &ds.trials {
                for t in 1..=trial.horizon() {
                    for x in trial.contexts(t).iter() {
                        assert!((norm2(x) - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn static_contexts_constant() {
        let ds = build_dataset(&config(ContextMode::Static), 46).unwrap();
        let tr = &ds.trials[0];
        assert_eq!(tr.contexts(1), tr.contexts(tr.horizon()));
    }

    #[test]
    fn time_varying_contexts_change() {
        let ds = build_dataset(&config(ContextMode::TimeVarying), 46).unwrap();
        let tr = &ds.trials[0];
        assert_ne!(tr.contexts(1), tr.contexts(2));
    }

    #[test]
    fn regeneration_is_identical() {
        let c = config(ContextMode::TimeVarying);
        let a = build_dataset(&c, 46).unwrap();
        let b = build_dataset(&c, 46).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), build_dataset(&c, 47).unwrap().digest());
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let mut c = config(ContextMode::Static);
        c.theta_star = vec![1.0, 1.0, 0.0];
        assert_eq!(build_dataset(&c, 0).unwrap_err().field, "theta_star");
        let mut c = config(ContextMode::Static);
        c.arms = 1;
        assert_eq!(build_dataset(&c, 0).unwrap_err().field, "arms");
        let mut c = config(ContextMode::Static);
        c.theta_star = vec![0.1];
        assert_eq!(build_dataset(&c, 0).unwrap_err().field, "theta_star");
        let mut c = config(ContextMode::Static);
        c.trials = 0;
        assert_eq!(build_dataset(&c, 0).unwrap_err().field, "trials");
    }

    #[test]
    fn optimal_arm_examples() {
        let ctx = ContextSet::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(optimal_arm(&[1.0, 0.0], &ctx), 0);
        let ctx = ContextSet::from_rows(&[vec![0.0, 1.0], vec![0.0, -1.0]]);
        assert_eq!(optimal_arm(&[1.0, 0.0], &ctx), 0);
    }

    #[test]
    fn optimal_arm_matches_scan() {
        let mut rng = StreamRng::new(99);
        for _ in 0..200 {
            let ctx = ContextSet::draw(&mut rng, 8, 3);
            let theta: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
            let vals: Vec<f64> = ctx.iter().map(|x| dot(&theta, x)).collect();
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let scan = vals.iter().position(|&v| v == max).unwrap();
            assert_eq!(optimal_arm(&theta, &ctx), scan);
        }
    }

    #[test]
    fn regret_step_examples() {
        let ctx = ContextSet::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let id = LinkFunction::identity();
        assert_eq!(pseudo_regret_step(&[1.0, 0.0], &id, &ctx, 1), 1.0);
        assert_eq!(pseudo_regret_step(&[1.0, 0.0], &id, &ctx, 0), 0.0);
    }

    #[test]
    fn empirical_reward_mean() {
        let c = DataConfig {
            arms: 2,
            dim: 2,
            horizon: 100_000,
            trials: 1,
            theta_star: vec![0.6, -0.3],
            context_mode: ContextMode::Static,
            link: LinkFunction::logistic(),
        };
        let tr = build_trial(&c, 46, 0);
        for a in 0..2 {
            let mean: f64 =
                (1..=c.horizon).map(|t| tr.reward(t, a)).sum::<f64>() / c.horizon as f64;
            let truth = c.link.eval(dot(&c.theta_star, tr.contexts(1).arm(a)));
            assert!((mean - truth).abs() < 0.02, "{mean} vs {truth}");
        }
    }
}

//! Replays trials through policies and records pseudo-regret.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use rbmle::environment::rng::{policy_stream_seed, StreamRng};
use rbmle::environment::{
    build_trial, generate_dataset, load_trial, manifest_matches, pseudo_regret_step, read_manifest,
    trial_digest, Dataset, DatasetHasher, LinkFunction, TrialData, MANIFEST_FILE,
};
use rbmle::{ConfigError, DatasetIoError, Policy};

use crate::config::ExperimentConfig;
use crate::coverage::{check_bound, CoverageReport};
use crate::error::{HarnessError, Result};
use crate::stats::{summarize, RegretSummary};

/// One policy's path through one trial. Vectors are indexed by `t − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub policy: String,
    pub arms: Vec<u32>,
    pub regret_inst: Vec<f64>,
    pub regret_cum: Vec<f64>,
    pub decision_ns: Vec<u64>,
}

impl TrialResult {
    pub fn horizon(&self) -> usize {
        self.arms.len()
    }

    pub fn final_regret(&self) -> f64 {
        self.regret_cum.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Run trials on the rayon pool. Results are identical either way.
    pub parallel: bool,
    /// Measure decision times. When off, every time is recorded as 0 and
    /// the output files are fully reproducible.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            parallel: true,
            timing: true,
        }
    }
}

/// Plays `policy` through all rounds of `trial`.
///
/// Only the `select` call is timed; reward lookup and regret bookkeeping
/// happen outside the measured interval.
pub fn run_trial(
    trial: &TrialData,
    policy: &mut dyn Policy,
    theta_star: &[f64],
    link: &LinkFunction,
    timing: bool,
) -> Result<TrialResult> {
    if theta_star.len() != trial.dim() {
        return Err(ConfigError::new(
            "theta_star",
            format!(
                "dataset has d = {}, config has {}",
                trial.dim(),
                theta_star.len()
            ),
        )
        .into());
    }
    let horizon = trial.horizon();
    let mut out = TrialResult {
        trial: trial.index(),
        policy: policy.name().to_string(),
        arms: Vec::with_capacity(horizon),
        regret_inst: Vec::with_capacity(horizon),
        regret_cum: Vec::with_capacity(horizon),
        decision_ns: Vec::with_capacity(horizon),
    };
    let mut cum = 0.0;
    for t in 1..=horizon {
        let contexts = trial.contexts(t);
        let (arm, ns) = if timing {
            let start = Instant::now();
            let arm = policy.select(contexts);
            (arm, start.elapsed().as_nanos() as u64)
        } else {
            (policy.select(contexts), 0)
        };
        let arm = arm.map_err(|source| HarnessError::Solver {
            policy: out.policy.clone(),
            trial: trial.index(),
            source,
        })?;
        let reward = trial.reward(t, arm);
        policy.update(contexts.arm(arm), reward);

        let r = pseudo_regret_step(theta_star, link, contexts, arm);
        cum += r;
        out.arms.push(arm as u32);
        out.regret_inst.push(r);
        out.regret_cum.push(cum);
        out.decision_ns.push(ns);
    }
    Ok(out)
}

/// Where trial data comes from.
#[derive(Debug, Clone, Copy)]
pub enum DataSource<'a> {
    /// Generate each trial on the fly from the config's seed.
    Generate,
    /// A saved dataset directory; tables are read one trial at a time.
    Directory(&'a Path),
    Memory(&'a Dataset),
}

#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub name: String,
    pub description: String,
    /// Indexed by trial.
    pub trials: Vec<TrialResult>,
}

impl PolicyRun {
    pub fn final_regrets(&self) -> Vec<f64> {
        self.trials.iter().map(TrialResult::final_regret).collect()
    }

    /// Mean over every decision in every trial.
    pub fn mean_decision_time_ns(&self) -> f64 {
        let n: usize = self.trials.iter().map(|t| t.decision_ns.len()).sum();
        let total: u128 = self
            .trials
            .iter()
            .flat_map(|t| &t.decision_ns)
            .map(|&ns| ns as u128)
            .sum();
        total as f64 / n.max(1) as f64
    }

    pub fn summary(&self) -> RegretSummary {
        summarize(&self.final_regrets())
            .expect("at least one trial")
            .with_policy(&self.name)
            .with_decision_time(self.mean_decision_time_ns())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub config_digest: String,
    pub dataset_digest: String,
    pub timing: bool,
    /// In config order.
    pub policies: Vec<PolicyRun>,
}

impl ExperimentOutcome {
    pub fn policy(&self, name: &str) -> Option<&PolicyRun> {
        self.policies.iter().find(|p| p.name == name)
    }

    pub fn summaries(&self) -> Vec<RegretSummary> {
        self.policies.iter().map(PolicyRun::summary).collect()
    }

    /// Bound coverage for every RBMLE policy, if the config asks for it.
    pub fn coverage(&self) -> Result<Vec<CoverageReport>> {
        let Some(spec) = &self.config.bound else {
            return Ok(Vec::new());
        };
        let factories = self.config.factories()?;
        let mut reports = Vec::new();
        for (factory, run) in factories.iter().zip(&self.policies) {
            let Some(family) = factory.bound_family() else {
                continue;
            };
            let params = crate::coverage::bound_params(&self.config, factory, spec);
            let report = check_bound(&run.name, &run.trials, &params, family)
                .map_err(|e| ConfigError::new("bound", e.to_string()))?;
            reports.push(report);
        }
        Ok(reports)
    }
}

/// Runs every configured policy over every trial on identical sample paths.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    source: DataSource<'_>,
    options: RunOptions,
) -> Result<ExperimentOutcome> {
    config.validate()?;
    let factories = config.factories()?;
    let data_config = config.data_config();
    let expected_digest = match source {
        DataSource::Generate => None,
        DataSource::Directory(dir) => {
            let manifest = read_manifest(dir)?;
            if !manifest_matches(&manifest, &data_config, config.seed) {
                return Err(ConfigError::new(
                    "data",
                    format!(
                        "dataset in {} was built from a different config or seed",
                        dir.display()
                    ),
                )
                .into());
            }
            Some(manifest.digest)
        }
        DataSource::Memory(ds) => {
            if ds.config != data_config || ds.seed != config.seed {
                return Err(ConfigError::new(
                    "data",
                    "dataset was built from a different config or seed",
                )
                .into());
            }
            None
        }
    };

    let run_one = |i: usize| -> Result<([u8; 32], Vec<TrialResult>)> {
        let owned;
        let trial = match source {
            DataSource::Generate => {
                owned = build_trial(&data_config, config.seed, i);
                &owned
            }
            DataSource::Directory(dir) => {
                owned = load_trial(dir, &data_config, i)?;
                &owned
            }
            DataSource::Memory(ds) => &ds.trials[i],
        };
        let digest = trial_digest(trial);
        let mut results = Vec::with_capacity(factories.len());
        for f in &factories {
            let rng = StreamRng::new(policy_stream_seed(config.seed, i as u64));
            let mut policy = f.build(rng);
            results.push(run_trial(
                trial,
                policy.as_mut(),
                &config.theta_star,
                &config.link,
                options.timing,
            )?);
        }
        Ok((digest, results))
    };

    // Collecting preserves trial order, so the fold below is the same
    // whether or not the trials ran concurrently.
    let per_trial: Vec<_> = if options.parallel {
        (0..config.trials)
            .into_par_iter()
            .map(run_one)
            .collect::<Result<_>>()?
    } else {
        (0..config.trials).map(run_one).collect::<Result<_>>()?
    };

    let mut hasher = DatasetHasher::default();
    let mut policies: Vec<PolicyRun> = factories
        .iter()
        .map(|f| PolicyRun {
            name: f.name().to_string(),
            description: f.describe(),
            trials: Vec::with_capacity(config.trials),
        })
        .collect();
    for (digest, results) in per_trial {
        hasher.push_digest(&digest);
        for (run, r) in policies.iter_mut().zip(results) {
            run.trials.push(r);
        }
    }
    let dataset_digest = hasher.finish();
    if let Some(expected) = expected_digest {
        if expected != dataset_digest {
            return Err(DatasetIoError::DigestMismatch {
                expected,
                actual: dataset_digest,
            }
            .into());
        }
    }
    Ok(ExperimentOutcome {
        config: config.clone(),
        config_digest: config.digest(),
        dataset_digest,
        timing: options.timing,
        policies,
    })
}

/// The `run` command: uses (or first builds) the dataset in `data_dir` when
/// given, runs the experiment and writes results to `out_dir`.
pub fn run_experiment(
    config: &ExperimentConfig,
    data_dir: Option<&Path>,
    out_dir: &Path,
    options: RunOptions,
) -> Result<ExperimentOutcome> {
    config.validate()?;
    let outcome = match data_dir {
        Some(dir) => {
            if !dir.join(MANIFEST_FILE).exists() {
                generate_dataset(&config.data_config(), config.seed, dir)?;
            }
            run_experiment_with(config, DataSource::Directory(dir), options)?
        }
        None => run_experiment_with(config, DataSource::Generate, options)?,
    };
    crate::output::write_results(&outcome, out_dir)?;
    Ok(outcome)
}

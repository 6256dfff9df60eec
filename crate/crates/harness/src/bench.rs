//! Per-decision timing over a grid of arm counts and dimensions, with
//! static contexts and an identity link.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rbmle::environment::rng::{mix, policy_stream_seed, StreamRng};
use rbmle::environment::{build_trial, write_atomic, ContextMode, LinkFunction};
use rbmle::ConfigError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, PolicySpec, Schedules};
use crate::error::{HarnessError, Result};
use crate::runner::run_trial;
use crate::stats::Welford;

pub const BENCH_FORMAT_VERSION: &str = "rbmle-bench/1";
pub const BENCH_FILE: &str = "bench.csv";
pub const DEFAULT_BENCH_POLICIES: &[&str] =
    &["lin-rbmle", "lin-ucb", "gpucb", "gpucb-tuned", "lin-ts"];

/// `d` values crossed with `K` values, written `"d=100,200,300;k=100,200"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchGrid {
    pub dims: Vec<usize>,
    pub arms: Vec<usize>,
}

impl FromStr for BenchGrid {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let (mut dims, mut arms) = (None, None);
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part.split_once('=').ok_or_else(|| {
                ConfigError::new("grid", format!("expected key=values in `{part}`"))
            })?;
            let values = values
                .split(',')
                .map(|v| v.trim().parse::<usize>().ok().filter(|&n| n > 0))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| ConfigError::new("grid", format!("bad value list in `{part}`")))?;
            match key.trim().to_ascii_lowercase().as_str() {
                "d" => dims = Some(values),
                "k" => arms = Some(values),
                other => return Err(ConfigError::new("grid", format!("unknown key `{other}`"))),
            }
        }
        let dims = dims.ok_or_else(|| ConfigError::new("grid", "missing d=..."))?;
        let arms = arms.ok_or_else(|| ConfigError::new("grid", "missing k=..."))?;
        if arms.iter().any(|&k| k < 2) {
            return Err(ConfigError::new("grid", "every K must be at least 2"));
        }
        Ok(Self { dims, arms })
    }
}

impl BenchGrid {
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.arms
            .iter()
            .flat_map(move |&k| self.dims.iter().map(move |&d| (k, d)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub grid: BenchGrid,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub policies: Vec<PolicySpec>,
}

impl BenchConfig {
    pub fn new(grid: BenchGrid, horizon: usize, trials: usize, seed: u64) -> Self {
        Self {
            grid,
            horizon,
            trials,
            seed,
            policies: DEFAULT_BENCH_POLICIES
                .iter()
                .map(|n| PolicySpec::new(*n))
                .collect(),
        }
    }

    pub fn digest(&self) -> String {
        let text = toml::to_string(self).expect("bench config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    fn experiment(&self, arms: usize, dim: usize) -> ExperimentConfig {
        ExperimentConfig {
            name: None,
            arms,
            dim,
            horizon: self.horizon,
            trials: self.trials,
            theta_star: bench_theta(self.seed, dim),
            context_mode: ContextMode::Static,
            link: LinkFunction::identity(),
            seed: self.seed,
            record_stride: 1,
            schedules: Schedules::default(),
            bound: None,
            policies: self.policies.clone(),
        }
    }
}

/// Unit-norm `θ*` for a grid cell, drawn from its own stream.
pub fn bench_theta(seed: u64, dim: usize) -> Vec<f64> {
    let mut rng = StreamRng::new(mix(seed, u64::MAX - dim as u64));
    let z: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
    let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    z.iter().map(|v| v / n).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub policy: String,
    pub arms: usize,
    pub dim: usize,
    pub decisions: u64,
    pub mean_ns: f64,
    pub std_ns: f64,
}

/// Runs serially so timings are not disturbed by sibling threads. Policies
/// are interleaved within each trial, in rotating order.
pub fn bench_scalability(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    if config.horizon == 0 || config.trials == 0 {
        return Err(ConfigError::new("bench", "horizon and trials must be positive").into());
    }
    let mut rows = Vec::new();
    for (k, d) in config.grid.cells() {
        let exp = config.experiment(k, d);
        exp.validate()?;
        let factories = exp.factories()?;
        let data = exp.data_config();
        let mut acc = vec![Welford::default(); factories.len()];
        for i in 0..config.trials {
            let trial = build_trial(&data, exp.seed, i);
            // rotate the starting policy so none always runs on a cold cache
            for j in 0..factories.len() {
                let p = (i + j) % factories.len();
                let rng = StreamRng::new(policy_stream_seed(exp.seed, i as u64));
                let mut policy = factories[p].build(rng);
                let r = run_trial(&trial, policy.as_mut(), &exp.theta_star, &exp.link, true)?;
                r.decision_ns.iter().for_each(|&ns| acc[p].push(ns as f64));
            }
        }
        for (f, w) in factories.iter().zip(&acc) {
            rows.push(BenchRow {
                policy: f.name().to_string(),
                arms: k,
                dim: d,
                decisions: w.count(),
                mean_ns: w.mean(),
                std_ns: w.std(),
            });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow], config: &BenchConfig) -> String {
    let mut s =
        String::from("policy,k,d,horizon,trials,mean_decision_time_ns,std_decision_time_ns\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.1},{:.1}",
            r.policy, r.arms, r.dim, config.horizon, config.trials, r.mean_ns, r.std_ns
        );
    }
    s
}

#[derive(Serialize)]
struct BenchManifest<'a> {
    format_version: &'a str,
    config_digest: String,
    files: Vec<&'a str>,
    config: &'a BenchConfig,
}

pub fn write_bench(rows: &[BenchRow], config: &BenchConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    let path = dir.join(BENCH_FILE);
    write_atomic(&path, bench_csv(rows, config).as_bytes()).map_err(HarnessError::io(&path))?;
    let manifest = BenchManifest {
        format_version: BENCH_FORMAT_VERSION,
        config_digest: config.digest(),
        files: vec![BENCH_FILE],
        config,
    };
    let path = dir.join(crate::output::RESULTS_MANIFEST);
    let text = toml::to_string(&manifest).map_err(|e| HarnessError::Format {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    write_atomic(&path, text.as_bytes()).map_err(HarnessError::io(&path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: BenchGrid = "d=100,200,300;k=100,200".parse().unwrap();
        assert_eq!(g.dims, vec![100, 200, 300]);
        assert_eq!(g.arms, vec![100, 200]);
        assert_eq!(g.cells().count(), 6);
        assert!("d=1;k=1".parse::<BenchGrid>().is_err());
        assert!("d=1".parse::<BenchGrid>().is_err());
        assert!("d=1,x;k=2".parse::<BenchGrid>().is_err());
        assert!("d=1;k=2;z=3".parse::<BenchGrid>().is_err());
    }

    #[test]
    fn theta_is_unit_norm() {
        let t = bench_theta(46, 100);
        let n: f64 = t.iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert_eq!(t, bench_theta(46, 100));
    }

    #[test]
    fn small_grid_rows() {
        let cfg = BenchConfig::new("d=3,5;k=4".parse().unwrap(), 10, 2, 1);
        let rows = bench_scalability(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * DEFAULT_BENCH_POLICIES.len());
        assert!(rows.iter().all(|r| r.mean_ns > 0.0 && r.decisions == 20));
        assert_eq!(bench_csv(&rows, &cfg).lines().count(), rows.len() + 1);
    }
}

//! Result files.
//!
//! ```text
//! <out>/records.csv     trial,t,policy,arm,regret_inst,regret_cum,decision_time_ns
//! <out>/summary.csv     policy,mean,std,q10,q25,q50,q75,q90,q95,mean_decision_time_ns
//! <out>/coverage.csv    one row per RBMLE policy when [bound] is configured
//! <out>/bound.csv       policy,t,bound (same rounds as records.csv)
//! <out>/manifest.toml   format version, digests, policy descriptions, config echo
//! ```
//!
//! Records are kept at `t = stride, 2·stride, …` and always at `t = T`.
//! Every file goes through write-then-rename, manifest last.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rbmle::environment::write_atomic;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::coverage::CoverageReport;
use crate::error::{HarnessError, Result};
use crate::runner::ExperimentOutcome;
use crate::stats::{quantile_label, summarize_levels, RegretSummary, DEFAULT_QUANTILES};

pub const RESULTS_FORMAT_VERSION: &str = "rbmle-results/1";
pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const COVERAGE_FILE: &str = "coverage.csv";
pub const BOUND_FILE: &str = "bound.csv";
pub const RESULTS_MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsManifest {
    pub format_version: String,
    pub config_digest: String,
    pub dataset_digest: String,
    /// False when decision times were not measured (all recorded as 0).
    pub timing: bool,
    pub files: Vec<String>,
    pub policies: Vec<PolicyEntry>,
    pub config: ExperimentConfig,
}

fn recorded(t: usize, horizon: usize, stride: usize) -> bool {
    t.is_multiple_of(stride) || t == horizon
}

fn finish_csv(w: csv::Writer<Vec<u8>>, path: &Path) -> Result<()> {
    let bytes = w.into_inner().map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    write_atomic(path, &bytes).map_err(HarnessError::io(path))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

pub fn records_csv(outcome: &ExperimentOutcome, path: &Path) -> Result<()> {
    let stride = outcome.config.record_stride;
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = csv_err(path);
    w.write_record([
        "trial",
        "t",
        "policy",
        "arm",
        "regret_inst",
        "regret_cum",
        "decision_time_ns",
    ])
    .map_err(&err)?;
    for trial in 0..outcome.config.trials {
        for run in &outcome.policies {
            let r = &run.trials[trial];
            let horizon = r.horizon();
            for t in (1..=horizon).filter(|&t| recorded(t, horizon, stride)) {
                w.write_record([
                    trial.to_string(),
                    t.to_string(),
                    run.name.clone(),
                    r.arms[t - 1].to_string(),
                    r.regret_inst[t - 1].to_string(),
                    r.regret_cum[t - 1].to_string(),
                    r.decision_ns[t - 1].to_string(),
                ])
                .map_err(&err)?;
            }
        }
    }
    finish_csv(w, path)
}

/// Writes summaries as CSV. The quantile columns follow the first summary.
pub fn summary_csv<W: std::io::Write>(summaries: &[RegretSummary], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let levels: Vec<f64> = summaries
        .first()
        .map(|s| s.quantiles.iter().map(|(l, _)| *l).collect())
        .unwrap_or_else(|| DEFAULT_QUANTILES.to_vec());
    let mut header = vec!["policy".to_string(), "mean".into(), "std".into()];
    header.extend(levels.iter().map(|&l| quantile_label(l)));
    header.push("mean_decision_time_ns".into());
    w.write_record(&header)?;
    for s in summaries {
        let mut row = vec![s.policy.clone(), s.mean.to_string(), s.std.to_string()];
        row.extend(s.quantiles.iter().map(|(_, v)| v.to_string()));
        row.push(format!("{:.1}", s.mean_decision_time_ns));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn coverage_csv(reports: &[CoverageReport], path: &Path) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "policy",
        "family",
        "delta",
        "trials",
        "dominated",
        "coverage",
        "g1_clamped_rounds",
    ])
    .map_err(&err)?;
    for r in reports {
        w.write_record([
            r.policy.clone(),
            format!("{:?}", r.family).to_lowercase(),
            r.delta.to_string(),
            r.trials.to_string(),
            r.dominated.to_string(),
            r.coverage.to_string(),
            r.g1_clamped_rounds.to_string(),
        ])
        .map_err(&err)?;
    }
    finish_csv(w, path)
}

fn bound_csv(reports: &[CoverageReport], stride: usize, path: &Path) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["policy", "t", "bound"]).map_err(&err)?;
    for r in reports {
        let horizon = r.bound.len();
        for t in (1..=horizon).filter(|&t| recorded(t, horizon, stride)) {
            w.write_record([r.policy.clone(), t.to_string(), r.bound[t - 1].to_string()])
                .map_err(&err)?;
        }
    }
    finish_csv(w, path)
}

/// Writes all result files for `outcome` into `dir`.
pub fn write_results(outcome: &ExperimentOutcome, dir: &Path) -> Result<ResultsManifest> {
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    let mut files = vec![RECORDS_FILE.to_string(), SUMMARY_FILE.to_string()];
    records_csv(outcome, &dir.join(RECORDS_FILE))?;

    let path = dir.join(SUMMARY_FILE);
    let mut buf = Vec::new();
    summary_csv(&outcome.summaries(), &mut buf).map_err(csv_err(&path))?;
    write_atomic(&path, &buf).map_err(HarnessError::io(&path))?;

    let reports = outcome.coverage()?;
    if outcome.config.bound.is_some() {
        coverage_csv(&reports, &dir.join(COVERAGE_FILE))?;
        bound_csv(
            &reports,
            outcome.config.record_stride,
            &dir.join(BOUND_FILE),
        )?;
        files.push(COVERAGE_FILE.into());
        files.push(BOUND_FILE.into());
    }

    let manifest = ResultsManifest {
        format_version: RESULTS_FORMAT_VERSION.to_string(),
        config_digest: outcome.config_digest.clone(),
        dataset_digest: outcome.dataset_digest.clone(),
        timing: outcome.timing,
        files,
        policies: outcome
            .policies
            .iter()
            .map(|p| PolicyEntry {
                name: p.name.clone(),
                description: p.description.clone(),
            })
            .collect(),
        config: outcome.config.clone(),
    };
    let path = dir.join(RESULTS_MANIFEST);
    let text = toml::to_string(&manifest).map_err(|e| HarnessError::Format {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    write_atomic(&path, text.as_bytes()).map_err(HarnessError::io(&path))?;
    Ok(manifest)
}

pub fn read_results_manifest(dir: &Path) -> Result<ResultsManifest> {
    let path = dir.join(RESULTS_MANIFEST);
    let text = fs::read_to_string(&path).map_err(HarnessError::io(&path))?;
    let raw: toml::Table = toml::from_str(&text).map_err(|e| HarnessError::Format {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    let version = raw.get("format_version").and_then(|v| v.as_str());
    if version != Some(RESULTS_FORMAT_VERSION) {
        return Err(HarnessError::Format {
            path,
            reason: format!(
                "unsupported results format {:?} (expected {RESULTS_FORMAT_VERSION})",
                version.unwrap_or("<missing>")
            ),
        });
    }
    toml::from_str(&text).map_err(|e| HarnessError::Format {
        path,
        reason: e.to_string(),
    })
}

#[derive(Deserialize)]
struct RecordRow {
    trial: usize,
    t: usize,
    policy: String,
    regret_cum: f64,
    decision_time_ns: u64,
}

/// Summaries recomputed from `records.csv`, in order of first appearance.
///
/// The final regret of each (policy, trial) is its value at the largest
/// recorded `t`. Decision times are averaged over the recorded rows only.
pub fn summarize_records(dir: &Path, levels: &[f64]) -> Result<Vec<RegretSummary>> {
    let path = dir.join(RECORDS_FILE);
    let err = csv_err(&path);
    let mut reader = csv::Reader::from_path(&path).map_err(&err)?;
    let mut order: Vec<String> = Vec::new();
    // policy -> trial -> (t, regret_cum); policy -> (time sum, rows)
    let mut finals: BTreeMap<String, BTreeMap<usize, (usize, f64)>> = BTreeMap::new();
    let mut times: BTreeMap<String, (u128, u64)> = BTreeMap::new();
    for row in reader.deserialize() {
        let row: RecordRow = row.map_err(&err)?;
        if !finals.contains_key(&row.policy) {
            order.push(row.policy.clone());
        }
        let slot = finals
            .entry(row.policy.clone())
            .or_default()
            .entry(row.trial)
            .or_insert((0, 0.0));
        if row.t >= slot.0 {
            *slot = (row.t, row.regret_cum);
        }
        let tm = times.entry(row.policy).or_default();
        tm.0 += row.decision_time_ns as u128;
        tm.1 += 1;
    }
    order
        .into_iter()
        .map(|policy| {
            let values: Vec<f64> = finals[&policy].values().map(|(_, v)| *v).collect();
            let (sum, n) = times[&policy];
            Ok(summarize_levels(&values, levels)?
                .with_decision_time(sum as f64 / n as f64)
                .with_policy(policy))
        })
        .collect()
}

//! On-disk dataset layout.
//!
//! ```text
//! <dir>/manifest.toml        format_version, seed, config_hash, digest, [config]
//!                            (digest = SHA-256 over the per-trial table SHA-256s)
//! <dir>/trial_00000.bin      trial table, see TrialData::write_table
//! <dir>/trial_00001.bin
//! ...
//! ```
//!
//! Every file is written to a `.tmp` sibling and renamed into place. The
//! manifest goes last, so a directory without one is an interrupted write.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::{
    build_trial, config_hash, norm2, trial_digest, ContextMode, ContextSet, DataConfig, Dataset,
    DatasetHasher, TrialData,
};
use crate::error::DatasetIoError;

pub const DATASET_FORMAT_VERSION: &str = "rbmle-dataset/1";
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: String,
    /// Decimal string; TOML integers cannot hold every `u64`.
    pub seed: String,
    pub config_hash: String,
    pub digest: String,
    pub config: DataConfig,
}

pub fn trial_file_name(index: usize) -> String {
    format!("trial_{index:05}.bin")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetIoError + '_ {
    move |source| DatasetIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<DatasetManifest, DatasetIoError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for trial in &dataset.trials {
        let path = dir.join(trial_file_name(trial.index()));
        let mut buf = Vec::new();
        trial.write_table(&mut buf).map_err(io_err(&path))?;
        write_atomic(&path, &buf).map_err(io_err(&path))?;
    }
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION.to_string(),
        seed: dataset.seed.to_string(),
        config_hash: dataset.config_hash(),
        digest: dataset.digest(),
        config: dataset.config.clone(),
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

/// Generates and saves a dataset one trial at a time, so peak memory is a
/// single trial table. Produces the same files as
/// `save_dataset(&build_dataset(config, seed)?, dir)`.
pub fn generate_dataset(
    config: &DataConfig,
    seed: u64,
    dir: &Path,
) -> Result<DatasetManifest, DatasetIoError> {
    config.validate()?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut hasher = DatasetHasher::default();
    for i in 0..config.trials {
        let trial = build_trial(config, seed, i);
        let path = dir.join(trial_file_name(i));
        let mut buf = Vec::new();
        trial.write_table(&mut buf).map_err(io_err(&path))?;
        hasher.push_digest(&trial_digest(&trial));
        write_atomic(&path, &buf).map_err(io_err(&path))?;
    }
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION.to_string(),
        seed: seed.to_string(),
        config_hash: config_hash(config, seed),
        digest: hasher.finish(),
        config: config.clone(),
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

fn write_manifest(dir: &Path, manifest: &DatasetManifest) -> Result<(), DatasetIoError> {
    let path = dir.join(MANIFEST_FILE);
    let text = toml::to_string(manifest).map_err(|e| DatasetIoError::Manifest {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    write_atomic(&path, text.as_bytes()).map_err(io_err(&path))
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest, DatasetIoError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    // Check the version before trusting the rest of the schema.
    let raw: toml::Table = toml::from_str(&text).map_err(|e| DatasetIoError::Manifest {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    let version = raw
        .get("format_version")
        .and_then(|v| v.as_str())
        .unwrap_or("<missing>");
    if version != DATASET_FORMAT_VERSION {
        return Err(DatasetIoError::UnsupportedVersion {
            found: version.to_string(),
            expected: DATASET_FORMAT_VERSION.to_string(),
        });
    }
    toml::from_str(&text).map_err(|e| DatasetIoError::Manifest {
        path,
        reason: e.to_string(),
    })
}

pub fn load_dataset(dir: &Path) -> Result<Dataset, DatasetIoError> {
    let manifest = read_manifest(dir)?;
    let config = manifest.config.clone();
    config.validate()?;
    let seed: u64 = manifest
        .seed
        .parse()
        .map_err(|_| DatasetIoError::Manifest {
            path: dir.join(MANIFEST_FILE),
            reason: format!("seed `{}` is not a u64", manifest.seed),
        })?;
    let trials = (0..config.trials)
        .map(|i| load_trial(dir, &config, i))
        .collect::<Result<Vec<_>, _>>()?;
    let dataset = Dataset {
        config,
        seed,
        trials,
    };
    let actual = dataset.digest();
    if actual != manifest.digest {
        return Err(DatasetIoError::DigestMismatch {
            expected: manifest.digest,
            actual,
        });
    }
    Ok(dataset)
}

/// Reads and structurally checks one trial table. The dataset digest is not
/// verified here; callers streaming trials should combine
/// [`trial_digest`]s and compare against the manifest themselves.
pub fn load_trial(
    dir: &Path,
    config: &DataConfig,
    index: usize,
) -> Result<TrialData, DatasetIoError> {
    let path = dir.join(trial_file_name(index));
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    let (k, d, horizon) = (config.arms, config.dim, config.horizon);
    let width = d + 3;
    let corrupt = |reason: String| DatasetIoError::Table {
        path: path.clone(),
        reason,
    };
    let expected_len = horizon * k * width * 8;
    if bytes.len() != expected_len {
        return Err(corrupt(format!(
            "{} bytes, expected {expected_len}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let mut rewards = Vec::with_capacity(horizon * k);
    let mut contexts = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let mut flat = Vec::with_capacity(k * d);
        for a in 0..k {
            let row = &values[((t - 1) * k + a) * width..][..width];
            if row[0] != t as f64 || row[1] != a as f64 {
                return Err(corrupt(format!(
                    "row for (t={t}, arm={a}) is labelled ({}, {})",
                    row[0], row[1]
                )));
            }
            let x = &row[2..2 + d];
            if (norm2(x) - 1.0).abs() > 1e-12 {
                return Err(corrupt(format!(
                    "context (t={t}, arm={a}) is not unit norm"
                )));
            }
            flat.extend_from_slice(x);
            rewards.push(row[2 + d]);
        }
        contexts.push(ContextSet::from_flat(d, flat));
    }
    if config.context_mode == ContextMode::Static && contexts.iter().any(|c| c != &contexts[0]) {
        return Err(corrupt(
            "static dataset has contexts that change over time".into(),
        ));
    }
    Ok(TrialData::from_parts(
        index,
        k,
        horizon,
        contexts,
        rewards,
        config.context_mode,
    ))
}

/// Checks that a manifest's config hash matches `(config, seed)`.
pub fn manifest_matches(manifest: &DatasetManifest, config: &DataConfig, seed: u64) -> bool {
    manifest.config_hash == config_hash(config, seed)
}

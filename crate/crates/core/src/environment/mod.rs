//! Synthetic contextual-bandit environments with sample-path coupling.

mod dataset;
mod io;
mod link;
pub mod rng;

pub use dataset::{
    build_dataset, build_trial, config_hash, optimal_arm, pseudo_regret_step, trial_digest,
    ContextMode, ContextSet, DataConfig, Dataset, DatasetHasher, TrialData, CONTEXT_VARIANCE,
};
pub use io::{
    generate_dataset, load_dataset, load_trial, manifest_matches, read_manifest, save_dataset,
    trial_file_name, write_atomic, DatasetManifest, DATASET_FORMAT_VERSION, MANIFEST_FILE,
};
pub use link::{
    link_antideriv, link_deriv, link_eval, LinkFunction, LinkKind, DEFAULT_CLAMP_RADIUS,
};

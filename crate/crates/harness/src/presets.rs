//! Named experiment configurations.

use rbmle::environment::{ContextMode, LinkFunction};

use crate::bench::{BenchConfig, BenchGrid};
use crate::config::{BoundSpec, ExperimentConfig, PolicySpec, Schedules};

pub const PRESET_NAMES: &[&str] = &[
    "fig2a", "fig2b", "fig2c", "fig2d", "fig4a", "fig4b", "table3",
];

pub const PRESET_SEED: u64 = 46;

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Experiment(ExperimentConfig),
    Bench(BenchConfig),
}

const THETA_LIN_A: [f64; 3] = [-0.3, 0.5, 0.8];
const THETA_LIN_B: [f64; 3] = [-0.7, -0.6, 0.1];
const THETA_GLM_A: [f64; 5] = [0.3, -0.5, 0.2, -0.7, -0.1];
const THETA_GLM_B: [f64; 5] = [0.2, -0.8, -0.5, 0.1, 0.1];

const LINEAR_POLICIES: &[&str] = &["lin-rbmle", "lin-ucb", "gpucb", "gpucb-tuned", "lin-ts"];
const GLM_POLICIES: &[&str] = &["glm-rbmle", "ucb-glm"];

fn experiment(
    name: &str,
    theta: &[f64],
    mode: ContextMode,
    link: LinkFunction,
    horizon: usize,
    stride: usize,
    policies: &[&str],
) -> ExperimentConfig {
    ExperimentConfig {
        name: Some(name.to_string()),
        arms: 10,
        dim: theta.len(),
        horizon,
        trials: 50,
        theta_star: theta.to_vec(),
        context_mode: mode,
        link,
        seed: PRESET_SEED,
        record_stride: stride,
        schedules: Schedules::default(),
        bound: Some(BoundSpec::default()),
        policies: policies.iter().map(|n| PolicySpec::new(*n)).collect(),
    }
}

fn linear(name: &str, theta: &[f64], mode: ContextMode) -> ExperimentConfig {
    experiment(
        name,
        theta,
        mode,
        LinkFunction::identity(),
        30_000,
        100,
        LINEAR_POLICIES,
    )
}

fn glm(name: &str, theta: &[f64]) -> ExperimentConfig {
    experiment(
        name,
        theta,
        ContextMode::Static,
        LinkFunction::logistic(),
        1_000,
        1,
        GLM_POLICIES,
    )
}

pub fn preset(name: &str) -> Option<Preset> {
    use ContextMode::{Static, TimeVarying};
    let p = match name {
        "fig2a" => Preset::Experiment(linear(name, &THETA_LIN_A, Static)),
        "fig2b" => Preset::Experiment(linear(name, &THETA_LIN_B, Static)),
        "fig2c" => Preset::Experiment(linear(name, &THETA_LIN_A, TimeVarying)),
        "fig2d" => Preset::Experiment(linear(name, &THETA_LIN_B, TimeVarying)),
        "fig4a" => Preset::Experiment(glm(name, &THETA_GLM_A)),
        "fig4b" => Preset::Experiment(glm(name, &THETA_GLM_B)),
        "table3" => Preset::Bench(BenchConfig::new(
            BenchGrid {
                dims: vec![100, 200, 300],
                arms: vec![100, 200],
            },
            100,
            50,
            PRESET_SEED,
        )),
        _ => return None,
    };
    Some(p)
}

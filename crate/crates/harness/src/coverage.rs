//! Empirical coverage of the closed-form regret bounds.

use rbmle::bounds::{
    g1_clamped, glm_regret_bound_curve, linear_regret_bound_curve, BoundError, BoundParams,
};

use crate::config::{BoundSpec, ExperimentConfig};
use crate::registry::{BoundFamily, PolicyFactory};
use crate::runner::TrialResult;

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub policy: String,
    pub family: BoundFamily,
    pub delta: f64,
    pub trials: usize,
    /// Trials whose cumulative regret stays at or below the bound at every round.
    pub dominated: usize,
    pub coverage: f64,
    /// Bound at `t = 1..=T`.
    pub bound: Vec<f64>,
    /// Rounds at which `G1`'s logarithm was negative and clamped to zero.
    pub g1_clamped_rounds: u64,
}

/// Bound parameters for one policy of an experiment.
pub fn bound_params(
    config: &ExperimentConfig,
    factory: &PolicyFactory,
    spec: &BoundSpec,
) -> BoundParams {
    let mut p = BoundParams::for_link(config.dim, &config.link);
    p.lambda = factory.lambda().unwrap_or(1.0);
    p.sigma = spec.sigma;
    p.delta = spec.delta;
    p.alpha = config.schedules.alpha.clone();
    p.eta = config.schedules.eta.clone();
    p
}

pub fn check_bound(
    policy: &str,
    results: &[TrialResult],
    params: &BoundParams,
    family: BoundFamily,
) -> Result<CoverageReport, BoundError> {
    let horizon = results.iter().map(TrialResult::horizon).max().unwrap_or(0) as u64;
    let bound = match family {
        BoundFamily::Linear => linear_regret_bound_curve(horizon, params),
        BoundFamily::Glm => glm_regret_bound_curve(horizon, params)?,
    };
    let dominated = results
        .iter()
        .filter(|r| r.regret_cum.iter().zip(&bound).all(|(reg, b)| reg <= b))
        .count();
    let trials = results.len();
    Ok(CoverageReport {
        policy: policy.to_string(),
        family,
        delta: params.delta,
        trials,
        dominated,
        coverage: if trials == 0 {
            1.0
        } else {
            dominated as f64 / trials as f64
        },
        g1_clamped_rounds: (1..=horizon).take_while(|&t| g1_clamped(t, params)).count() as u64,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rbmle::environment::LinkFunction;

    fn trace(cum: Vec<f64>) -> TrialResult {
        let n = cum.len();
        TrialResult {
            trial: 0,
            policy: "p".into(),
            arms: vec![0; n],
            regret_inst: vec![0.0; n],
            regret_cum: cum,
            decision_ns: vec![0; n],
        }
    }

    #[test]
    fn zero_regret_is_covered() {
        let p = BoundParams::for_link(3, &LinkFunction::identity());
        let r = check_bound("oracle", &[trace(vec![0.0; 200])], &p, BoundFamily::Linear).unwrap();
        assert_eq!(r.coverage, 1.0);
        assert!(r.bound.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r.g1_clamped_rounds, 1);
    }

    #[test]
    fn linear_growth_escapes_eventually() {
        let p = BoundParams::for_link(3, &LinkFunction::identity());
        let huge: Vec<f64> = (1..=200).map(|t| 1e3 * t as f64).collect();
        let r = check_bound(
            "bad",
            &[trace(vec![0.0; 200]), trace(huge)],
            &p,
            BoundFamily::Linear,
        )
        .unwrap();
        assert_eq!((r.trials, r.dominated), (2, 1));
        assert_eq!(r.coverage, 0.5);
    }

    #[test]
    fn glm_family_uses_glm_bound() {
        let p = BoundParams::for_link(5, &LinkFunction::logistic());
        let r = check_bound("g", &[trace(vec![0.0; 50])], &p, BoundFamily::Glm).unwrap();
        assert_eq!(r.bound, glm_regret_bound_curve(50, &p).unwrap());
    }
}

//! Closed-form high-probability regret bounds for the reward-biased
//! policies, evaluated numerically so empirical regret can be compared
//! against them.
//!
//! ```text
//! G0(t) = σ·sqrt(d·log((λ + t)/(λδ))) + sqrt(λ)
//! G1(t) = sqrt(2d·max(log((λ + t)/d), 0))
//! G2(t) = (σ/κ)·sqrt((d/2)·log(1 + 2t/d) + log(1/δ))
//!
//! linear: G0(T)²·Σ 1/(2α(t)) + sqrt(T)·G0(T)·G1(T) + ½·α(T)·G1(T)²
//! GLM:    T0 + C1·α(T)·G1(T)² + C2·sqrt(T)·G1(T)·G2(T) + C3·G2(T)²·Σ 1/α(t)
//! ```
//!
//! with `C1 = 2L⁴/κ⁴ + 1/κ²`, `C2 = 2L³/κ² + L/κ`, `C3 = L²/2` and
//! `T0 = min{t ≥ 1 : L³/(2κ²η(t)) < ½}`.
//!
//! `G1` is clamped at zero while `λ + t < d`, where the logarithm would be
//! negative; [`g1_clamped`] reports when that happens.

use thiserror::Error;

use crate::environment::LinkFunction;
use crate::error::ConfigError;
use crate::schedule::{BiasSchedule, EtaSchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    pub dim: usize,
    pub lambda: f64,
    pub sigma: f64,
    pub delta: f64,
    pub kappa_mu: f64,
    pub l_mu: f64,
    pub alpha: BiasSchedule,
    pub eta: EtaSchedule,
}

impl BoundParams {
    /// Defaults for a given dimension and link: `λ = 1`, `σ = 1`, `δ = 0.1`,
    /// `α(t) = √t`, `η(t) = 1 + log t`.
    pub fn for_link(dim: usize, link: &LinkFunction) -> Self {
        Self {
            dim,
            lambda: 1.0,
            sigma: 1.0,
            delta: 0.1,
            kappa_mu: link.kappa_mu(),
            l_mu: link.l_mu(),
            alpha: BiasSchedule::SqrtT,
            eta: EtaSchedule::OnePlusLog,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dim == 0 {
            return Err(ConfigError::new("d", "must be positive"));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("sigma", self.sigma),
            ("kappa", self.kappa_mu),
            ("lmu", self.l_mu),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::new(name, "must be positive and finite"));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ConfigError::new("delta", "must lie in (0, 1)"));
        }
        self.alpha.validate()?;
        self.eta.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("eta(t) never satisfies L^3/(2 kappa^2 eta(t)) < 1/2 for t <= {limit}")]
    BurnInNotReached { limit: u64 },
}

pub fn g0(t: u64, p: &BoundParams) -> f64 {
    let arg = (p.lambda + t as f64) / (p.lambda * p.delta);
    p.sigma * (p.dim as f64 * arg.ln().max(0.0)).sqrt() + p.lambda.sqrt()
}

pub fn g1(t: u64, p: &BoundParams) -> f64 {
    let d = p.dim as f64;
    (2.0 * d * ((p.lambda + t as f64) / d).ln().max(0.0)).sqrt()
}

/// True when the logarithm inside [`g1`] is negative and was clamped.
pub fn g1_clamped(t: u64, p: &BoundParams) -> bool {
    p.lambda + (t as f64) < p.dim as f64
}

pub fn g2(t: u64, p: &BoundParams) -> f64 {
    let d = p.dim as f64;
    let inner = 0.5 * d * (1.0 + 2.0 * t as f64 / d).ln() + (1.0 / p.delta).ln();
    p.sigma / p.kappa_mu * inner.max(0.0).sqrt()
}

/// `(C1, C2, C3)` from the link-derivative bounds.
pub fn glm_constants(p: &BoundParams) -> (f64, f64, f64) {
    let (l, k) = (p.l_mu, p.kappa_mu);
    let c1 = 2.0 * l.powi(4) / k.powi(4) + 1.0 / (k * k);
    let c2 = 2.0 * l.powi(3) / (k * k) + l / k;
    let c3 = l * l / 2.0;
    (c1, c2, c3)
}

/// Largest round searched by [`burn_in_rounds`].
pub const BURN_IN_LIMIT: u64 = 1 << 53;

/// `T0 = min{t ≥ 1 : L³/(2κ²η(t)) < ½}`.
///
/// Equivalent to a forward scan over `t`; since `η` is strictly increasing
/// the first hit is located by doubling and bisection.
pub fn burn_in_rounds(p: &BoundParams) -> Result<u64, BoundError> {
    let ratio = p.l_mu.powi(3) / (2.0 * p.kappa_mu * p.kappa_mu);
    let ok = |t: u64| ratio / p.eta.eval(t) < 0.5;
    if ok(1) {
        return Ok(1);
    }
    let mut hi = 2u64;
    while !ok(hi) {
        if hi >= BURN_IN_LIMIT {
            return Err(BoundError::BurnInNotReached {
                limit: BURN_IN_LIMIT,
            });
        }
        hi *= 2;
    }
    // invariant: !ok(lo), ok(hi)
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Linear bound at every horizon `1..=horizon`, in one pass.
pub fn linear_regret_bound_curve(horizon: u64, p: &BoundParams) -> Vec<f64> {
    let mut half_inv_alpha = 0.0;
    (1..=horizon)
        .map(|t| {
            let alpha = p.alpha.eval(t);
            half_inv_alpha += 1.0 / (2.0 * alpha);
            let (a, b) = (g0(t, p), g1(t, p));
            a * a * half_inv_alpha + (t as f64).sqrt() * a * b + 0.5 * alpha * b * b
        })
        .collect()
}

pub fn linear_regret_bound(horizon: u64, p: &BoundParams) -> f64 {
    assert!(horizon >= 1);
    *linear_regret_bound_curve(horizon, p).last().unwrap()
}

/// GLM bound at every horizon `1..=horizon`, in one pass.
pub fn glm_regret_bound_curve(horizon: u64, p: &BoundParams) -> Result<Vec<f64>, BoundError> {
    let t0 = burn_in_rounds(p)? as f64;
    let (c1, c2, c3) = glm_constants(p);
    let mut inv_alpha = 0.0;
    Ok((1..=horizon)
        .map(|t| {
            let alpha = p.alpha.eval(t);
            inv_alpha += 1.0 / alpha;
            let (a, b) = (g1(t, p), g2(t, p));
            t0 + c1 * alpha * a * a + c2 * (t as f64).sqrt() * a * b + c3 * b * b * inv_alpha
        })
        .collect())
}

pub fn glm_regret_bound(horizon: u64, p: &BoundParams) -> Result<f64, BoundError> {
    assert!(horizon >= 1);
    Ok(*glm_regret_bound_curve(horizon, p)?.last().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize) -> BoundParams {
        BoundParams::for_link(d, &LinkFunction::identity())
    }

    #[test]
    fn g0_values() {
        let p = params(3);
        assert!((g0(99, &p) - ((3.0 * 1000f64.ln()).sqrt() + 1.0)).abs() < 1e-12);
        assert!((g0(99, &p) - 5.5523).abs() < 1e-4);
        let mut deg = params(3);
        deg.delta = 1.0;
        assert_eq!(g0(0, &deg), 1.0);
        for t in 1..200 {
            assert!(g0(t + 1, &p) > g0(t, &p));
        }
    }

    #[test]
    fn g1_values() {
        let p = params(3);
        assert_eq!(g1(2, &p), 0.0);
        assert!((g1(80, &p) - (6.0 * 27f64.ln()).sqrt()).abs() < 1e-12);
        assert!((g1(80, &p) - 4.4469).abs() < 1e-4);
        assert_eq!(g1(1, &p), 0.0);
        assert!(g1_clamped(1, &p));
        assert!(!g1_clamped(2, &p));
    }

    #[test]
    fn g2_values() {
        let mut p = params(3);
        p.kappa_mu = 0.196612;
        assert!((g2(99, &p) - 14.924).abs() < 1e-3);
        let mut z = params(2);
        z.delta = 1.0;
        assert_eq!(g2(0, &z), 0.0);
        let mut tight = p.clone();
        tight.delta = 0.01;
        assert!(g2(99, &tight) > g2(99, &p));
        assert!(g2(100, &p) > g2(99, &p));
    }

    #[test]
    fn linear_bound_at_one() {
        let p = params(3);
        let g = g0(1, &p);
        assert!((linear_regret_bound(1, &p) - 0.5 * g * g).abs() < 1e-12);
    }

    #[test]
    fn burn_in_examples() {
        let p = params(3);
        assert_eq!(burn_in_rounds(&p).unwrap(), 2);
        let q = BoundParams::for_link(5, &LinkFunction::logistic());
        assert_eq!(burn_in_rounds(&q).unwrap(), 1);
        // forward scan agrees on a harder case
        let mut r = params(3);
        r.l_mu = 2.0;
        let ratio = 8.0 / 2.0;
        let scan = (1u64..).find(|&t| ratio / r.eta.eval(t) < 0.5).unwrap();
        assert_eq!(burn_in_rounds(&r).unwrap(), scan);
    }

    #[test]
    fn burn_in_unreachable() {
        let mut p = params(3);
        p.kappa_mu = 1e-9;
        assert!(burn_in_rounds(&p).is_err());
    }

    #[test]
    fn bounds_nondecreasing_and_positive() {
        let p = params(3);
        let lin = linear_regret_bound_curve(5000, &p);
        assert!(lin.windows(2).all(|w| w[1] >= w[0]));
        let q = BoundParams::for_link(5, &LinkFunction::logistic());
        let glm = glm_regret_bound_curve(5000, &q).unwrap();
        assert!(glm.windows(2).all(|w| w[1] >= w[0]));
        assert!(glm.iter().chain(&lin).all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn glm_bound_terms_nonnegative() {
        let q = BoundParams::for_link(5, &LinkFunction::logistic());
        let (c1, c2, c3) = glm_constants(&q);
        assert!(c1 > 0.0 && c2 > 0.0 && c3 > 0.0);
        assert!(glm_regret_bound(1, &q).unwrap() >= 1.0);
    }

    #[test]
    fn validate_rejects_bad_delta() {
        let mut p = params(3);
        p.delta = 1.0;
        assert_eq!(p.validate().unwrap_err().field, "delta");
    }
}

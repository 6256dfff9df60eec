//! Index policies for the standard linear bandit.
//!
//! All of them share a ridge-regression state: `V = XᵀX + λI`, its inverse,
//! `b = XᵀR` and `θ̂ = V⁻¹b`. The reward-biased index of an arm is
//!
//! ```text
//! θ̂ᵀx + ½·α(t)·‖x‖²_{V⁻¹}
//! ```
//!
//! which is the closed form of maximizing the Gaussian log-likelihood plus
//! the reward bias `α(t)·θᵀx` and the ridge penalty. The UCB-style baselines
//! use the square root of the same quadratic form instead.

use nalgebra::DVector;

use crate::environment::rng::StreamRng;
use crate::environment::ContextSet;
use crate::error::{ConfigError, SolverError};
use crate::policy::{argmax_lowest, Policy};
use crate::schedule::BiasSchedule;
use crate::spd::SpdMatrix;

/// Rank-one updates between two full re-inversions of `V`.
pub const DEFAULT_REFRESH_EVERY: u64 = 1000;

/// Ridge-regression state shared by the linear index policies.
#[derive(Debug, Clone)]
pub struct LinearPolicyState {
    t: u64,
    lambda: f64,
    v: SpdMatrix,
    v_inv: SpdMatrix,
    b: DVector<f64>,
    theta_hat: DVector<f64>,
    refresh_every: u64,
}

impl LinearPolicyState {
    pub fn new(dim: usize, lambda: f64) -> Self {
        assert!(lambda > 0.0, "ridge weight must be positive");
        Self {
            t: 1,
            lambda,
            v: SpdMatrix::scaled_identity(dim, lambda),
            v_inv: SpdMatrix::scaled_identity(dim, 1.0 / lambda),
            b: DVector::zeros(dim),
            theta_hat: DVector::zeros(dim),
            refresh_every: DEFAULT_REFRESH_EVERY,
        }
    }

    /// Sets how many rank-one updates may accumulate before `V⁻¹` is
    /// recomputed from `V`. Zero disables the refresh.
    pub fn with_refresh_every(mut self, rounds: u64) -> Self {
        self.refresh_every = rounds;
        self
    }

    /// Builds a state from explicit parts; `θ̂` is derived as `V⁻¹b`.
    /// Intended for tests and for replaying externally computed states.
    pub fn from_parts(
        t: u64,
        lambda: f64,
        v: SpdMatrix,
        v_inv: SpdMatrix,
        b: DVector<f64>,
    ) -> Self {
        let theta_hat = v_inv.as_matrix() * &b;
        Self {
            t,
            lambda,
            v,
            v_inv,
            b,
            theta_hat,
            refresh_every: DEFAULT_REFRESH_EVERY,
        }
    }

    /// Current decision round, 1 before any update.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn v(&self) -> &SpdMatrix {
        &self.v
    }

    pub fn v_inv(&self) -> &SpdMatrix {
        &self.v_inv
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn theta_hat(&self) -> &DVector<f64> {
        &self.theta_hat
    }

    pub fn estimate(&self, x: &[f64]) -> f64 {
        self.theta_hat.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Records the pulled context `x` and its reward `r`.
    pub fn update(&mut self, x: &[f64], r: f64) {
        self.v.add_outer(x);
        if self.refresh_every > 0 && self.t.is_multiple_of(self.refresh_every) {
            self.v_inv = self.v.inverse().expect("V = XᵀX + λI is positive definite");
        } else {
            self.v_inv.rank_one_inverse_update_in_place(x);
        }
        for (bi, xi) in self.b.iter_mut().zip(x) {
            *bi += r * xi;
        }
        self.theta_hat = self.v_inv.as_matrix() * &self.b;
        self.t += 1;
    }
}

/// Functional form of [`LinearPolicyState::update`].
pub fn update_linear(state: &LinearPolicyState, x: &[f64], r: f64) -> LinearPolicyState {
    let mut next = state.clone();
    next.update(x, r);
    next
}

/// Reward-biased index `θ̂ᵀx + ½·α·‖x‖²_{V⁻¹}`.
pub fn lin_rbmle_index(state: &LinearPolicyState, x: &[f64], alpha: f64) -> f64 {
    state.estimate(x) + 0.5 * alpha * state.v_inv.quad_form(x)
}

/// Maximizer `V⁻¹(b + αx)` of the biased Gaussian objective for one arm.
pub fn closed_form_biased_estimate(
    state: &LinearPolicyState,
    x: &[f64],
    alpha: f64,
) -> DVector<f64> {
    let rhs = &state.b + DVector::from_column_slice(x) * alpha;
    state.v_inv.as_matrix() * rhs
}

/// `−Σ(θᵀx_s − r_s)² + 2α·θᵀx − λ‖θ‖²`, twice the log-likelihood-plus-bias
/// with constants dropped. `history` holds `(x_s, r_s)` pairs.
pub fn biased_gaussian_objective(
    history: &[(Vec<f64>, f64)],
    theta: &[f64],
    x: &[f64],
    alpha: f64,
    lambda: f64,
) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let sse: f64 = history
        .iter()
        .map(|(xs, rs)| (dot(theta, xs) - rs).powi(2))
        .sum();
    -sse + 2.0 * alpha * dot(theta, x) - lambda * dot(theta, theta)
}

/// `θ̂ᵀx + γ·‖x‖_{V⁻¹}`.
pub fn lin_ucb_index(state: &LinearPolicyState, x: &[f64], gamma: f64) -> f64 {
    state.estimate(x) + gamma * state.v_inv.quad_form(x).sqrt()
}

/// Confidence-width rule for GP-UCB with a linear kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GpucbWidth {
    /// `β_t = 2·log(K·t²·π²/(6δ))`.
    Standard { delta: f64 },
    /// `β_t = c·max(log t, 0)`.
    Tuned { c: f64 },
}

impl GpucbWidth {
    pub fn beta(&self, t: u64, arms: usize) -> f64 {
        let t = t as f64;
        match *self {
            GpucbWidth::Standard { delta } => {
                let pi2 = std::f64::consts::PI * std::f64::consts::PI;
                2.0 * (arms as f64 * t * t * pi2 / (6.0 * delta)).ln()
            }
            GpucbWidth::Tuned { c } => c * t.ln().max(0.0),
        }
    }

    /// `w_t = sqrt(β_t)`.
    pub fn width(&self, t: u64, arms: usize) -> f64 {
        self.beta(t, arms).max(0.0).sqrt()
    }

    /// Text form of the β rule, for results metadata.
    pub fn describe(&self) -> String {
        match self {
            GpucbWidth::Standard { delta } => {
                format!("beta_t = 2*log(K*t^2*pi^2/(6*delta)), delta = {delta}")
            }
            GpucbWidth::Tuned { c } => format!("beta_t = c*max(log t, 0), c = {c}"),
        }
    }
}

/// `θ̂ᵀx + sqrt(β_t)·‖x‖_{V⁻¹}`.
pub fn gpucb_index(
    state: &LinearPolicyState,
    x: &[f64],
    t: u64,
    arms: usize,
    width: GpucbWidth,
) -> f64 {
    lin_ucb_index(state, x, width.width(t, arms))
}

/// Posterior scale `v_t` for linear Thompson sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinTsScale {
    /// `v_t = sqrt((24/ε)·d·log(max(t, 2)/δ))`.
    Default {
        delta: f64,
        epsilon: f64,
    },
    Constant(f64),
}

impl LinTsScale {
    pub fn eval(&self, t: u64, dim: usize) -> f64 {
        match *self {
            LinTsScale::Default { delta, epsilon } => {
                let t = t.max(2) as f64;
                ((24.0 / epsilon) * dim as f64 * (t / delta).ln()).sqrt()
            }
            LinTsScale::Constant(v) => v,
        }
    }
}

/// Samples `θ̃ ~ N(θ̂, v_t²·V⁻¹)` and returns the lowest argmax of `θ̃ᵀx_a`.
pub fn lin_ts_select(
    state: &LinearPolicyState,
    contexts: &ContextSet,
    scale: LinTsScale,
    rng: &mut StreamRng,
) -> usize {
    let d = state.dim();
    let v = scale.eval(state.t, d);
    let z = DVector::from_fn(d, |_, _| rng.standard_normal());
    let sample = if v == 0.0 {
        state.theta_hat.clone()
    } else {
        let l = state
            .v_inv
            .cholesky_factor()
            .expect("V⁻¹ is positive definite");
        &state.theta_hat + (l * z) * v
    };
    argmax_lowest(
        contexts
            .iter()
            .map(|x| sample.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()),
    )
}

/// Deterministic index rules over the shared ridge state.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearRule {
    RbMle { alpha: BiasSchedule },
    Ucb { gamma: f64 },
    Gpucb(GpucbWidth),
    Greedy,
}

impl LinearRule {
    pub fn index(&self, state: &LinearPolicyState, x: &[f64], arms: usize) -> f64 {
        match self {
            LinearRule::RbMle { alpha } => lin_rbmle_index(state, x, alpha.eval(state.t)),
            LinearRule::Ucb { gamma } => lin_ucb_index(state, x, *gamma),
            LinearRule::Gpucb(w) => gpucb_index(state, x, state.t, arms, *w),
            LinearRule::Greedy => state.estimate(x),
        }
    }

    /// The index of every arm at once; same values as [`index`](Self::index)
    /// up to rounding, but with the quadratic forms batched.
    pub fn scores(&self, state: &LinearPolicyState, contexts: &ContextSet) -> Vec<f64> {
        let est = contexts.iter().map(|x| state.estimate(x));
        if let LinearRule::Greedy = self {
            return est.collect();
        }
        let q = state.v_inv.quad_forms(contexts.as_slice());
        let arms = contexts.arms();
        est.zip(q)
            .map(|(e, q)| match self {
                LinearRule::RbMle { alpha } => e + 0.5 * alpha.eval(state.t) * q,
                LinearRule::Ucb { gamma } => e + gamma * q.sqrt(),
                LinearRule::Gpucb(w) => e + w.width(state.t, arms) * q.sqrt(),
                LinearRule::Greedy => e,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            LinearRule::RbMle { alpha } => alpha.validate(),
            LinearRule::Ucb { gamma } if !(*gamma >= 0.0) => {
                Err(ConfigError::new("gamma", "must be nonnegative"))
            }
            LinearRule::Gpucb(GpucbWidth::Standard { delta })
                if !(*delta > 0.0 && *delta < 1.0) =>
            {
                Err(ConfigError::new("delta", "must lie in (0, 1)"))
            }
            LinearRule::Gpucb(GpucbWidth::Tuned { c }) if !(*c >= 0.0) => {
                Err(ConfigError::new("c", "must be nonnegative"))
            }
            _ => Ok(()),
        }
    }
}

/// Lowest argmax of the rule's index over the revealed arms.
pub fn select_arm_linear(
    state: &LinearPolicyState,
    contexts: &ContextSet,
    rule: &LinearRule,
) -> usize {
    argmax_lowest(rule.scores(state, contexts))
}

/// A deterministic linear index policy.
#[derive(Debug, Clone)]
pub struct LinearIndexPolicy {
    name: String,
    state: LinearPolicyState,
    rule: LinearRule,
}

impl LinearIndexPolicy {
    pub fn new(name: impl Into<String>, dim: usize, lambda: f64, rule: LinearRule) -> Self {
        Self {
            name: name.into(),
            state: LinearPolicyState::new(dim, lambda),
            rule,
        }
    }

    /// Overrides how often `V⁻¹` is recomputed from scratch.
    pub fn with_refresh_every(mut self, rounds: u64) -> Self {
        self.state = self.state.with_refresh_every(rounds);
        self
    }

    pub fn state(&self) -> &LinearPolicyState {
        &self.state
    }

    pub fn rule(&self) -> &LinearRule {
        &self.rule
    }
}

impl Policy for LinearIndexPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, contexts: &ContextSet) -> Result<usize, SolverError> {
        Ok(select_arm_linear(&self.state, contexts, &self.rule))
    }

    fn update(&mut self, x: &[f64], reward: f64) {
        self.state.update(x, reward);
    }
}

/// Linear Thompson sampling with its own random stream.
#[derive(Debug, Clone)]
pub struct LinTsPolicy {
    name: String,
    state: LinearPolicyState,
    scale: LinTsScale,
    rng: StreamRng,
}

impl LinTsPolicy {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        lambda: f64,
        scale: LinTsScale,
        rng: StreamRng,
    ) -> Self {
        Self {
            name: name.into(),
            state: LinearPolicyState::new(dim, lambda),
            scale,
            rng,
        }
    }
}

impl Policy for LinTsPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, contexts: &ContextSet) -> Result<usize, SolverError> {
        Ok(lin_ts_select(
            &self.state,
            contexts,
            self.scale,
            &mut self.rng,
        ))
    }

    fn update(&mut self, x: &[f64], reward: f64) {
        self.state.update(x, reward);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    const X: [f64; 2] = [0.6, 0.8];

    /// θ̂ = (1, 0), V⁻¹ = diag(0.5, 1).
    fn hand_state() -> LinearPolicyState {
        let v = SpdMatrix::from_diagonal(&[2.0, 1.0]);
        let v_inv = SpdMatrix::from_diagonal(&[0.5, 1.0]);
        LinearPolicyState::from_parts(5, 1.0, v, v_inv, DVector::from_vec(vec![2.0, 0.0]))
    }

    #[test]
    fn fresh_state_index() {
        let s = LinearPolicyState::new(2, 1.0);
        assert!((lin_rbmle_index(&s, &X, 1.0) - 0.5).abs() < 1e-15);
        assert!((lin_ucb_index(&s, &X, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluated_indices() {
        let s = hand_state();
        assert_eq!(s.theta_hat().as_slice(), &[1.0, 0.0]);
        assert!((lin_rbmle_index(&s, &X, 2.0) - 1.42).abs() < 1e-12);
        let ucb = lin_ucb_index(&s, &X, 2.0);
        assert!((ucb - (0.6 + 2.0 * 0.82f64.sqrt())).abs() < 1e-12);
        assert!((ucb - 2.411077).abs() < 1e-6);
        assert_eq!(lin_rbmle_index(&s, &X, 0.0), s.estimate(&X));
        assert_eq!(lin_ucb_index(&s, &X, 0.0), s.estimate(&X));
    }

    #[test]
    fn batched_scores_match_index() {
        let s = hand_state();
        let ctx = ContextSet::from_rows(&[vec![0.6, 0.8], vec![1.0, 0.0], vec![-0.2, 0.9]]);
        let rules = [
            LinearRule::RbMle {
                alpha: BiasSchedule::SqrtT,
            },
            LinearRule::Ucb { gamma: 2.0 },
            LinearRule::Gpucb(GpucbWidth::Tuned { c: 0.9 }),
            LinearRule::Greedy,
        ];
        for rule in rules {
            let batch = rule.scores(&s, &ctx);
            for (a, x) in ctx.iter().enumerate() {
                assert!((batch[a] - rule.index(&s, x, 3)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn biased_estimate_examples() {
        let s = LinearPolicyState::new(2, 1.0);
        let est = closed_form_biased_estimate(&s, &X, 2.0);
        assert!((est[0] - 1.2).abs() < 1e-15 && (est[1] - 1.6).abs() < 1e-15);
        let s = hand_state();
        assert_eq!(closed_form_biased_estimate(&s, &X, 0.0), *s.theta_hat());
    }

    #[test]
    fn gpucb_widths() {
        // 2·log(10·π²/(6·10⁻⁵)) evaluated in double precision: 28.62642...
        let std = GpucbWidth::Standard { delta: 1e-5 };
        assert!((std.beta(1, 10) - 28.626422).abs() < 1e-6);
        assert!((std.width(1, 10) - 5.350367).abs() < 1e-6);
        // tuned: w = sqrt(c·log t); c = 0.9 at log t = 1 gives sqrt(0.9)
        let tuned = GpucbWidth::Tuned { c: 0.9 };
        assert_eq!(tuned.width(1, 10), 0.0);
        let t = 20u64;
        let per_log = tuned.beta(t, 10) / (t as f64).ln();
        assert!((per_log.sqrt() - 0.948683).abs() < 1e-6);
        let s = hand_state();
        assert_eq!(
            gpucb_index(&s, &X, 1, 10, GpucbWidth::Tuned { c: 0.0 }),
            s.estimate(&X)
        );
    }

    #[test]
    fn update_examples() {
        let mut s = LinearPolicyState::new(2, 1.0);
        s.update(&[1.0, 0.0], 2.0);
        assert!((s.theta_hat()[0] - 1.0).abs() < 1e-15 && s.theta_hat()[1] == 0.0);
        assert_eq!(s.t(), 2);
        let before = s.theta_hat().clone();
        s.update(&[0.0, 0.0], 0.0);
        assert_eq!(*s.theta_hat(), before);
        assert_eq!(s.t(), 3);
    }

    #[test]
    fn updates_match_batch_solve() {
        let mut rng = StreamRng::new(5);
        let d = 4;
        let mut s = LinearPolicyState::new(d, 1.0).with_refresh_every(7);
        let mut xs = Vec::new();
        let mut rs = Vec::new();
        for _ in 0..50 {
            let x: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let x: Vec<f64> = x.iter().map(|v| v / n).collect();
            let r = rng.standard_normal();
            s.update(&x, r);
            xs.extend(x);
            rs.push(r);
        }
        let xm = DMatrix::from_row_slice(50, d, &xs);
        let gram = xm.transpose() * &xm + DMatrix::identity(d, d);
        let rhs = xm.transpose() * DVector::from_vec(rs);
        let direct = gram.lu().solve(&rhs).unwrap();
        assert!((s.theta_hat() - direct).abs().max() < 1e-8);
        assert_eq!(s.t(), 51);
    }

    #[test]
    fn selection_ties_and_fresh_state() {
        let s = LinearPolicyState::new(2, 1.0);
        let ctx = ContextSet::from_rows(&[vec![0.6, 0.8], vec![1.0, 0.0], vec![0.0, -1.0]]);
        let rule = LinearRule::RbMle {
            alpha: BiasSchedule::SqrtT,
        };
        assert_eq!(select_arm_linear(&s, &ctx, &rule), 0);
        assert_eq!(select_arm_linear(&s, &ctx, &LinearRule::Greedy), 0);
    }

    #[test]
    fn thompson_zero_scale_is_greedy() {
        let s = hand_state();
        let ctx = ContextSet::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![0.6, 0.8]]);
        let mut rng = StreamRng::new(3);
        for _ in 0..20 {
            assert_eq!(
                lin_ts_select(&s, &ctx, LinTsScale::Constant(0.0), &mut rng),
                select_arm_linear(&s, &ctx, &LinearRule::Greedy)
            );
        }
    }

    #[test]
    fn thompson_is_deterministic_per_stream() {
        let s = LinearPolicyState::new(2, 1.0);
        let ctx = ContextSet::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![-1.0, 0.0]]);
        let scale = LinTsScale::Default {
            delta: 0.5,
            epsilon: 0.9,
        };
        let run = || {
            let mut rng = StreamRng::new(11);
            (0..50)
                .map(|_| lin_ts_select(&s, &ctx, scale, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn thompson_symmetric_frequencies() {
        let s = LinearPolicyState::new(2, 1.0);
        let ctx = ContextSet::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
        ]);
        let mut rng = StreamRng::new(2024);
        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[lin_ts_select(&s, &ctx, LinTsScale::Constant(1.0), &mut rng)] += 1;
        }
        let p = 0.25;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn lin_ts_default_scale() {
        let s = LinTsScale::Default {
            delta: 0.5,
            epsilon: 0.9,
        };
        let want = ((24.0 / 0.9) * 3.0 * (2.0f64 / 0.5).ln()).sqrt();
        assert!((s.eval(1, 3) - want).abs() < 1e-12);
        assert_eq!(s.eval(1, 3), s.eval(2, 3));
    }
}

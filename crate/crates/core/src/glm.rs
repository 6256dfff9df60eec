//! Generalized-linear policies.
//!
//! GLM-RBMLE scores every arm by solving a reward-biased, ridge-penalized
//! maximum-likelihood problem for that arm,
//!
//! ```text
//! θ̄_a = argmax_θ  ℓ(θ) + α(t)·θᵀx_a − (λ/2)‖θ‖²
//! ℓ(θ) = Σ_s r_s·x_sᵀθ − b(x_sᵀθ)
//! ```
//!
//! and then pulls the arm maximizing `ℓ(θ̄_a) + η(t)·α(t)·θ̄_aᵀx_a −
//! (λ/2)‖θ̄_a‖²`. The objective is strictly concave (its Hessian is at most
//! `−λI`), so damped Newton from any start reaches the unique maximizer.
//!
//! UCB-GLM pulls the arms round-robin for the first `τ` rounds and then uses
//! `θ̂ᵀx + χ·‖x‖_{V⁻¹}` with the ridge-regularized GLM estimate `θ̂`.

use nalgebra::{DMatrix, DVector};

use crate::environment::{ContextSet, LinkFunction};
use crate::error::{ConfigError, SolverError};
use crate::policy::{argmax_lowest, Policy};
use crate::schedule::{BiasSchedule, EtaSchedule};
use crate::spd::SpdMatrix;

/// Damped-Newton settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the gradient's ℓ₂ norm.
    pub tolerance: f64,
    /// Step halvings tried before a step is taken regardless.
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-10,
            max_halvings: 40,
        }
    }
}

/// Observed `(x_s, r_s)` pairs, contexts stored row-major.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GlmHistory {
    dim: usize,
    xs: Vec<f64>,
    rs: Vec<f64>,
}

impl GlmHistory {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            xs: Vec::new(),
            rs: Vec::new(),
        }
    }

    pub fn from_pairs(dim: usize, pairs: &[(Vec<f64>, f64)]) -> Self {
        let mut h = Self::new(dim);
        for (x, r) in pairs {
            h.push(x, *r);
        }
        h
    }

    pub fn push(&mut self, x: &[f64], r: f64) {
        assert_eq!(x.len(), self.dim);
        self.xs.extend_from_slice(x);
        self.rs.push(r);
    }

    pub fn len(&self) -> usize {
        self.rs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.xs.chunks_exact(self.dim).zip(self.rs.iter().copied())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// `Σ_s r_s·z_s − b(z_s)` with `z_s = x_sᵀθ`; the θ-free normalizer is dropped.
pub fn glm_log_likelihood(history: &GlmHistory, theta: &[f64], link: &LinkFunction) -> f64 {
    history
        .iter()
        .map(|(x, r)| {
            let z = dot(x, theta);
            r * z - link.antideriv(z)
        })
        .sum()
}

/// `ℓ(θ) + θᵀc − (λ/2)‖θ‖²`, the concave objective every solve maximizes.
pub fn penalized_objective(
    history: &GlmHistory,
    link: &LinkFunction,
    lambda: f64,
    linear_term: &[f64],
    theta: &[f64],
) -> f64 {
    glm_log_likelihood(history, theta, link) + dot(theta, linear_term)
        - 0.5 * lambda * dot(theta, theta)
}

/// Gradient `Σ(r_s − μ(z_s))x_s + c − λθ` of [`penalized_objective`].
pub fn penalized_gradient(
    history: &GlmHistory,
    link: &LinkFunction,
    lambda: f64,
    linear_term: &[f64],
    theta: &[f64],
) -> DVector<f64> {
    let mut g = DVector::from_column_slice(linear_term);
    for (x, r) in history.iter() {
        let w = r - link.eval(dot(x, theta));
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += w * xi;
        }
    }
    for (gi, ti) in g.iter_mut().zip(theta) {
        *gi -= lambda * ti;
    }
    g
}

/// Negated Hessian `Σ μ′(z_s)x_sx_sᵀ + λI`, positive definite.
pub fn negated_hessian(
    history: &GlmHistory,
    link: &LinkFunction,
    lambda: f64,
    theta: &[f64],
) -> DMatrix<f64> {
    let d = history.dim();
    let mut h = DMatrix::from_diagonal_element(d, d, lambda);
    for (x, _) in history.iter() {
        let w = link.deriv(dot(x, theta));
        for j in 0..d {
            let wxj = w * x[j];
            if wxj == 0.0 {
                continue;
            }
            for i in 0..d {
                h[(i, j)] += wxj * x[i];
            }
        }
    }
    h
}

/// Maximizes [`penalized_objective`] by damped Newton from `start`.
///
/// Steps are halved until the objective does not decrease (up to rounding);
/// iteration stops once the gradient norm is at most `opts.tolerance`.
pub fn newton_maximize(
    history: &GlmHistory,
    link: &LinkFunction,
    lambda: f64,
    linear_term: &[f64],
    start: &[f64],
    opts: NewtonOptions,
) -> Result<DVector<f64>, SolverError> {
    let mut theta = DVector::from_column_slice(start);
    let mut value = penalized_objective(history, link, lambda, linear_term, theta.as_slice());
    let mut grad = penalized_gradient(history, link, lambda, linear_term, theta.as_slice());
    for _ in 0..opts.max_iterations {
        if grad.norm() <= opts.tolerance {
            return Ok(theta);
        }
        let h = negated_hessian(history, link, lambda, theta.as_slice());
        let step = match h.cholesky() {
            Some(ch) => ch.solve(&grad),
            None => grad.clone() / lambda,
        };
        let mut scale = 1.0;
        let mut candidate = &theta + &step;
        let mut cand_value =
            penalized_objective(history, link, lambda, linear_term, candidate.as_slice());
        let slack = 1e-12 * value.abs().max(1.0);
        let mut halvings = 0;
        while !(cand_value >= value - slack) && halvings < opts.max_halvings {
            scale *= 0.5;
            halvings += 1;
            candidate = &theta + &step * scale;
            cand_value =
                penalized_objective(history, link, lambda, linear_term, candidate.as_slice());
        }
        theta = candidate;
        value = cand_value;
        grad = penalized_gradient(history, link, lambda, linear_term, theta.as_slice());
    }
    let residual = grad.norm();
    if residual <= opts.tolerance {
        Ok(theta)
    } else {
        Err(SolverError {
            iterations: opts.max_iterations,
            residual,
        })
    }
}

/// Per-trial state of the GLM policies.
#[derive(Debug, Clone)]
pub struct GlmPolicyState {
    lambda: f64,
    link: LinkFunction,
    history: GlmHistory,
    /// Previous round's solution per arm index.
    warm_starts: Vec<DVector<f64>>,
    mle_warm: DVector<f64>,
    v: SpdMatrix,
    v_inv: SpdMatrix,
    newton: NewtonOptions,
}

impl GlmPolicyState {
    pub fn new(dim: usize, lambda: f64, link: LinkFunction) -> Self {
        assert!(lambda > 0.0, "ridge weight must be positive");
        Self {
            lambda,
            link,
            history: GlmHistory::new(dim),
            warm_starts: Vec::new(),
            mle_warm: DVector::zeros(dim),
            v: SpdMatrix::scaled_identity(dim, lambda),
            v_inv: SpdMatrix::scaled_identity(dim, 1.0 / lambda),
            newton: NewtonOptions::default(),
        }
    }

    pub fn from_history(history: GlmHistory, lambda: f64, link: LinkFunction) -> Self {
        let mut s = Self::new(history.dim(), lambda, link);
        let pairs: Vec<(Vec<f64>, f64)> = history.iter().map(|(x, r)| (x.to_vec(), r)).collect();
        for (x, r) in pairs {
            s.update(&x, r);
        }
        s
    }

    pub fn with_newton(mut self, opts: NewtonOptions) -> Self {
        self.newton = opts;
        self
    }

    /// Current decision round: one more than the number of observations.
    pub fn t(&self) -> u64 {
        self.history.len() as u64 + 1
    }

    pub fn dim(&self) -> usize {
        self.history.dim()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn link(&self) -> &LinkFunction {
        &self.link
    }

    pub fn history(&self) -> &GlmHistory {
        &self.history
    }

    pub fn v_inv(&self) -> &SpdMatrix {
        &self.v_inv
    }

    pub fn newton(&self) -> NewtonOptions {
        self.newton
    }

    pub fn update(&mut self, x: &[f64], r: f64) {
        self.history.push(x, r);
        self.v.add_outer(x);
        self.v_inv.rank_one_inverse_update_in_place(x);
    }

    /// Solves for arm `arm`, warm-starting from that arm's previous solution
    /// and storing the new one.
    pub fn solve_arm_warm(
        &mut self,
        arm: usize,
        x_a: &[f64],
        alpha: f64,
    ) -> Result<DVector<f64>, SolverError> {
        if self.warm_starts.len() <= arm {
            self.warm_starts.resize(arm + 1, DVector::zeros(self.dim()));
        }
        let sol = solve_biased(self, x_a, alpha, self.warm_starts[arm].as_slice())?;
        self.warm_starts[arm] = sol.clone();
        Ok(sol)
    }

    /// [`glm_mle`] warm-started from the previous estimate.
    pub fn mle_warm(&mut self) -> Result<DVector<f64>, SolverError> {
        let zero = vec![0.0; self.dim()];
        let sol = if self.history.is_empty() {
            DVector::zeros(self.dim())
        } else {
            newton_maximize(
                &self.history,
                &self.link,
                self.lambda,
                &zero,
                self.mle_warm.as_slice(),
                self.newton,
            )?
        };
        self.mle_warm = sol.clone();
        Ok(sol)
    }
}

fn solve_biased(
    state: &GlmPolicyState,
    x_a: &[f64],
    alpha: f64,
    start: &[f64],
) -> Result<DVector<f64>, SolverError> {
    let c: Vec<f64> = x_a.iter().map(|v| alpha * v).collect();
    if state.history.is_empty() {
        // −λθ + αx_a = 0
        return Ok(DVector::from_iterator(
            c.len(),
            c.iter().map(|v| v / state.lambda),
        ));
    }
    newton_maximize(
        &state.history,
        &state.link,
        state.lambda,
        &c,
        start,
        state.newton,
    )
}

/// Root `θ̄` of `Σ(r_s − μ(x_sᵀθ))x_s − λθ + αx_a = 0`, solved from zero.
pub fn glm_rbmle_arm_solve(
    state: &GlmPolicyState,
    x_a: &[f64],
    alpha: f64,
) -> Result<DVector<f64>, SolverError> {
    let zero = vec![0.0; state.dim()];
    solve_biased(state, x_a, alpha, &zero)
}

/// Same as [`glm_rbmle_arm_solve`] but starting Newton from `start`.
pub fn glm_rbmle_arm_solve_from(
    state: &GlmPolicyState,
    x_a: &[f64],
    alpha: f64,
    start: &[f64],
) -> Result<DVector<f64>, SolverError> {
    solve_biased(state, x_a, alpha, start)
}

/// `ℓ(θ̄) + η·α·θ̄ᵀx_a − (λ/2)‖θ̄‖²`.
pub fn glm_rbmle_score(
    state: &GlmPolicyState,
    theta_bar: &[f64],
    x_a: &[f64],
    alpha: f64,
    eta: f64,
) -> f64 {
    glm_log_likelihood(&state.history, theta_bar, &state.link) + eta * alpha * dot(theta_bar, x_a)
        - 0.5 * state.lambda * dot(theta_bar, theta_bar)
}

/// Ridge-regularized GLM estimate: root of `Σ(r_s − μ(x_sᵀθ))x_s − λθ = 0`.
pub fn glm_mle(state: &GlmPolicyState) -> Result<DVector<f64>, SolverError> {
    if state.history.is_empty() {
        return Ok(DVector::zeros(state.dim()));
    }
    let zero = vec![0.0; state.dim()];
    newton_maximize(
        &state.history,
        &state.link,
        state.lambda,
        &zero,
        &zero,
        state.newton,
    )
}

/// `θ̂ᵀx + χ·‖x‖_{V⁻¹}` with `V = Σx_sx_sᵀ + λI` from the state's history.
pub fn ucb_glm_index(state: &GlmPolicyState, theta_hat: &[f64], x: &[f64], chi: f64) -> f64 {
    dot(theta_hat, x) + chi * state.v_inv.quad_form(x).sqrt()
}

/// `χ = (σ/κ)·sqrt((d/2)·log(1 + 2T/d) + log(1/δ))`.
pub fn ucb_glm_chi(sigma: f64, kappa: f64, dim: usize, horizon: usize, delta: f64) -> f64 {
    let d = dim as f64;
    let inner = 0.5 * d * (1.0 + 2.0 * horizon as f64 / d).ln() + (1.0 / delta).ln();
    sigma / kappa * inner.sqrt()
}

/// GLM-RBMLE.
#[derive(Debug, Clone)]
pub struct GlmRbmlePolicy {
    name: String,
    state: GlmPolicyState,
    alpha: BiasSchedule,
    eta: EtaSchedule,
}

impl GlmRbmlePolicy {
    pub fn new(
        name: impl Into<String>,
        state: GlmPolicyState,
        alpha: BiasSchedule,
        eta: EtaSchedule,
    ) -> Result<Self, ConfigError> {
        alpha.validate()?;
        eta.validate()?;
        Ok(Self {
            name: name.into(),
            state,
            alpha,
            eta,
        })
    }

    pub fn state(&self) -> &GlmPolicyState {
        &self.state
    }
}

impl Policy for GlmRbmlePolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, contexts: &ContextSet) -> Result<usize, SolverError> {
        let t = self.state.t();
        let alpha = self.alpha.eval(t);
        let eta = self.eta.eval(t);
        let mut scores = Vec::with_capacity(contexts.arms());
        for (a, x) in contexts.iter().enumerate() {
            let theta_bar = self.state.solve_arm_warm(a, x, alpha)?;
            scores.push(glm_rbmle_score(
                &self.state,
                theta_bar.as_slice(),
                x,
                alpha,
                eta,
            ));
        }
        Ok(argmax_lowest(scores))
    }

    fn update(&mut self, x: &[f64], reward: f64) {
        self.state.update(x, reward);
    }
}

/// UCB-GLM with a round-robin warm-up of `tau` rounds.
#[derive(Debug, Clone)]
pub struct UcbGlmPolicy {
    name: String,
    state: GlmPolicyState,
    chi: f64,
    tau: usize,
}

impl UcbGlmPolicy {
    pub fn new(name: impl Into<String>, state: GlmPolicyState, chi: f64, tau: usize) -> Self {
        Self {
            name: name.into(),
            state,
            chi,
            tau,
        }
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }
}

impl Policy for UcbGlmPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, contexts: &ContextSet) -> Result<usize, SolverError> {
        let t = self.state.t() as usize;
        if t <= self.tau {
            return Ok((t - 1) % contexts.arms());
        }
        let theta_hat = self.state.mle_warm()?;
        Ok(argmax_lowest(contexts.iter().map(|x| {
            ucb_glm_index(&self.state, theta_hat.as_slice(), x, self.chi)
        })))
    }

    fn update(&mut self, x: &[f64], reward: f64) {
        self.state.update(x, reward);
    }
}

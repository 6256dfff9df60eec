//! Policy names understood by experiment configs, and their parameters.
//!
//! | name          | params (default)                                        |
//! |---------------|---------------------------------------------------------|
//! | `lin-rbmle`   | `lambda` (1), `refresh_every` (1000)                    |
//! | `lin-ucb`     | `lambda` (1), `gamma` (1)                               |
//! | `gpucb`       | `lambda` (1), `delta` (1e-5)                            |
//! | `gpucb-tuned` | `lambda` (1), `c` (0.9)                                 |
//! | `lin-ts`      | `lambda` (1), `delta` (0.5), `epsilon` (0.9), `scale`   |
//! | `glm-rbmle`   | `lambda` (1)                                            |
//! | `ucb-glm`     | `lambda` (1), `delta` (0.1), `sigma` (1), `tau` (K)     |
//! | `uniform`     | none                                                    |
//! | `oracle`      | none                                                    |
//!
//! `lin-rbmle` and `glm-rbmle` take `α(t)` (and `η(t)`) from the config's
//! `[schedules]` table.

use rbmle::environment::rng::StreamRng;
use rbmle::environment::{optimal_arm, ContextSet, LinkFunction};
use rbmle::glm::{ucb_glm_chi, GlmPolicyState, GlmRbmlePolicy, UcbGlmPolicy};
use rbmle::linear::{
    GpucbWidth, LinTsPolicy, LinTsScale, LinearIndexPolicy, LinearRule, DEFAULT_REFRESH_EVERY,
};
use rbmle::schedule::{BiasSchedule, EtaSchedule};
use rbmle::{ConfigError, Policy, SolverError};

use crate::config::{ExperimentConfig, PolicySpec};

pub const POLICY_NAMES: &[&str] = &[
    "lin-rbmle",
    "lin-ucb",
    "gpucb",
    "gpucb-tuned",
    "lin-ts",
    "glm-rbmle",
    "ucb-glm",
    "uniform",
    "oracle",
];

/// Which closed-form regret bound applies to a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundFamily {
    Linear,
    Glm,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Linear {
        lambda: f64,
        refresh_every: u64,
        rule: LinearRule,
    },
    LinTs {
        lambda: f64,
        scale: LinTsScale,
    },
    GlmRbmle {
        lambda: f64,
        alpha: BiasSchedule,
        eta: EtaSchedule,
    },
    UcbGlm {
        lambda: f64,
        chi: f64,
        tau: usize,
    },
    Uniform,
    Oracle {
        theta_star: Vec<f64>,
    },
}

/// A parsed policy spec that can stamp out fresh instances, one per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyFactory {
    name: String,
    dim: usize,
    link: LinkFunction,
    kind: Kind,
}

struct Params<'a> {
    policy: &'a str,
    table: &'a toml::Table,
    used: Vec<&'static str>,
}

impl<'a> Params<'a> {
    fn new(spec: &'a PolicySpec) -> Self {
        Self {
            policy: &spec.name,
            table: &spec.params,
            used: Vec::new(),
        }
    }

    fn field(&self, key: &str) -> String {
        format!("policies.{}.{key}", self.policy)
    }

    fn opt_f64(&mut self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.used.push(key);
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(v)) => Ok(Some(*v)),
            Some(toml::Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(_) => Err(ConfigError::new(self.field(key), "expected a number")),
        }
    }

    fn positive(&mut self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        let v = self.opt_f64(key)?.unwrap_or(default);
        if !(v > 0.0 && v.is_finite()) {
            return Err(ConfigError::new(
                self.field(key),
                "must be positive and finite",
            ));
        }
        Ok(v)
    }

    fn nonnegative(&mut self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        let v = self.opt_f64(key)?.unwrap_or(default);
        if !(v >= 0.0 && v.is_finite()) {
            return Err(ConfigError::new(
                self.field(key),
                "must be nonnegative and finite",
            ));
        }
        Ok(v)
    }

    fn probability(&mut self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        let v = self.opt_f64(key)?.unwrap_or(default);
        if !(v > 0.0 && v < 1.0) {
            return Err(ConfigError::new(self.field(key), "must lie in (0, 1)"));
        }
        Ok(v)
    }

    fn count(&mut self, key: &'static str, default: u64) -> Result<u64, ConfigError> {
        self.used.push(key);
        match self.table.get(key) {
            None => Ok(default),
            Some(toml::Value::Integer(v)) if *v >= 0 => Ok(*v as u64),
            Some(_) => Err(ConfigError::new(
                self.field(key),
                "expected a nonnegative integer",
            )),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.table.keys().find(|k| !self.used.contains(&k.as_str())) {
            Some(k) => Err(ConfigError::new(self.field(k), "unknown parameter")),
            None => Ok(()),
        }
    }
}

impl PolicyFactory {
    pub fn parse(spec: &PolicySpec, config: &ExperimentConfig) -> Result<Self, ConfigError> {
        let mut p = Params::new(spec);
        let kind = match spec.name.as_str() {
            "lin-rbmle" => Kind::Linear {
                lambda: p.positive("lambda", 1.0)?,
                refresh_every: p.count("refresh_every", DEFAULT_REFRESH_EVERY)?,
                rule: LinearRule::RbMle {
                    alpha: config.schedules.alpha.clone(),
                },
            },
            "lin-ucb" => Kind::Linear {
                lambda: p.positive("lambda", 1.0)?,
                refresh_every: DEFAULT_REFRESH_EVERY,
                rule: LinearRule::Ucb {
                    gamma: p.nonnegative("gamma", 1.0)?,
                },
            },
            "gpucb" => Kind::Linear {
                lambda: p.positive("lambda", 1.0)?,
                refresh_every: DEFAULT_REFRESH_EVERY,
                rule: LinearRule::Gpucb(GpucbWidth::Standard {
                    delta: p.probability("delta", 1e-5)?,
                }),
            },
            "gpucb-tuned" => Kind::Linear {
                lambda: p.positive("lambda", 1.0)?,
                refresh_every: DEFAULT_REFRESH_EVERY,
                rule: LinearRule::Gpucb(GpucbWidth::Tuned {
                    c: p.nonnegative("c", 0.9)?,
                }),
            },
            "lin-ts" => {
                let lambda = p.positive("lambda", 1.0)?;
                let delta = p.probability("delta", 0.5)?;
                let epsilon = p.probability("epsilon", 0.9)?;
                let scale = match p.opt_f64("scale")? {
                    Some(v) if v >= 0.0 && v.is_finite() => LinTsScale::Constant(v),
                    Some(_) => {
                        return Err(ConfigError::new(p.field("scale"), "must be nonnegative"))
                    }
                    None => LinTsScale::Default { delta, epsilon },
                };
                Kind::LinTs { lambda, scale }
            }
            "glm-rbmle" => Kind::GlmRbmle {
                lambda: p.positive("lambda", 1.0)?,
                alpha: config.schedules.alpha.clone(),
                eta: config.schedules.eta.clone(),
            },
            "ucb-glm" => {
                let lambda = p.positive("lambda", 1.0)?;
                let delta = p.probability("delta", 0.1)?;
                let sigma = p.positive("sigma", 1.0)?;
                let tau = p.count("tau", config.arms as u64)? as usize;
                let chi = ucb_glm_chi(
                    sigma,
                    config.link.kappa_mu(),
                    config.dim,
                    config.horizon,
                    delta,
                );
                Kind::UcbGlm { lambda, chi, tau }
            }
            "uniform" => Kind::Uniform,
            "oracle" => Kind::Oracle {
                theta_star: config.theta_star.clone(),
            },
            other => {
                return Err(ConfigError::new(
                    "policies",
                    format!(
                        "unknown policy `{other}` (known: {})",
                        POLICY_NAMES.join(", ")
                    ),
                ))
            }
        };
        p.finish()?;
        Ok(Self {
            name: spec.name.clone(),
            dim: config.dim,
            link: config.link,
            kind,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `λ` for ridge-based policies.
    pub fn lambda(&self) -> Option<f64> {
        match &self.kind {
            Kind::Linear { lambda, .. }
            | Kind::LinTs { lambda, .. }
            | Kind::GlmRbmle { lambda, .. }
            | Kind::UcbGlm { lambda, .. } => Some(*lambda),
            Kind::Uniform | Kind::Oracle { .. } => None,
        }
    }

    pub fn bound_family(&self) -> Option<BoundFamily> {
        match &self.kind {
            Kind::Linear {
                rule: LinearRule::RbMle { .. },
                ..
            } => Some(BoundFamily::Linear),
            Kind::GlmRbmle { .. } => Some(BoundFamily::Glm),
            _ => None,
        }
    }

    /// Human-readable parameter summary for results metadata.
    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Linear {
                lambda,
                refresh_every,
                rule,
            } => match rule {
                LinearRule::RbMle { alpha } => format!(
                    "lambda = {lambda}, alpha = {}, refresh_every = {refresh_every}",
                    describe_alpha(alpha)
                ),
                LinearRule::Ucb { gamma } => format!("lambda = {lambda}, gamma = {gamma}"),
                LinearRule::Gpucb(w) => format!("lambda = {lambda}, {}", w.describe()),
                LinearRule::Greedy => format!("lambda = {lambda}, greedy"),
            },
            Kind::LinTs { lambda, scale } => match scale {
                LinTsScale::Default { delta, epsilon } => format!(
                    "lambda = {lambda}, v_t = sqrt(24/epsilon*d*log(t/delta)), \
                     delta = {delta}, epsilon = {epsilon}"
                ),
                LinTsScale::Constant(v) => format!("lambda = {lambda}, v_t = {v}"),
            },
            Kind::GlmRbmle { lambda, alpha, eta } => format!(
                "lambda = {lambda}, alpha = {}, eta = {}, link = {:?}",
                describe_alpha(alpha),
                describe_eta(eta),
                self.link.kind
            ),
            Kind::UcbGlm { lambda, chi, tau } => format!(
                "lambda = {lambda}, chi = {chi}, round-robin warm-up tau = {tau}, link = {:?}",
                self.link.kind
            ),
            Kind::Uniform => "uniformly random arm".to_string(),
            Kind::Oracle { .. } => "optimal arm under theta_star".to_string(),
        }
    }

    /// A fresh policy instance; `rng` is used only by randomized policies.
    pub fn build(&self, rng: StreamRng) -> Box<dyn Policy> {
        let name = self.name.clone();
        match &self.kind {
            Kind::Linear {
                lambda,
                refresh_every,
                rule,
            } => Box::new(
                LinearIndexPolicy::new(name, self.dim, *lambda, rule.clone())
                    .with_refresh_every(*refresh_every),
            ),
            Kind::LinTs { lambda, scale } => {
                Box::new(LinTsPolicy::new(name, self.dim, *lambda, *scale, rng))
            }
            Kind::GlmRbmle { lambda, alpha, eta } => Box::new(
                GlmRbmlePolicy::new(
                    name,
                    GlmPolicyState::new(self.dim, *lambda, self.link),
                    alpha.clone(),
                    eta.clone(),
                )
                .expect("schedules validated at parse time"),
            ),
            Kind::UcbGlm { lambda, chi, tau } => Box::new(UcbGlmPolicy::new(
                name,
                GlmPolicyState::new(self.dim, *lambda, self.link),
                *chi,
                *tau,
            )),
            Kind::Uniform => Box::new(UniformPolicy { name, rng }),
            Kind::Oracle { theta_star } => Box::new(OraclePolicy {
                name,
                theta_star: theta_star.clone(),
            }),
        }
    }
}

fn describe_alpha(alpha: &BiasSchedule) -> String {
    match alpha {
        BiasSchedule::SqrtT => "sqrt(t)".to_string(),
        BiasSchedule::Table(v) => format!("table of {} values", v.len()),
    }
}

fn describe_eta(eta: &EtaSchedule) -> String {
    match eta {
        EtaSchedule::OnePlusLog => "1 + log t".to_string(),
        EtaSchedule::AffineLog { offset, slope } => format!("{offset} + {slope}*log t"),
    }
}

/// Picks an arm uniformly at random.
pub struct UniformPolicy {
    name: String,
    rng: StreamRng,
}

impl UniformPolicy {
    pub fn new(name: impl Into<String>, rng: StreamRng) -> Self {
        Self {
            name: name.into(),
            rng,
        }
    }
}

impl Policy for UniformPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, contexts: &ContextSet) -> Result<usize, SolverError> {
        Ok(self.rng.below(contexts.arms() as u64) as usize)
    }

    fn update(&mut self, _x: &[f64], _reward: f64) {}
}

/// Always plays the arm that is optimal under the true parameter.
pub struct OraclePolicy {
    name: String,
    theta_star: Vec<f64>,
}

impl OraclePolicy {
    pub fn new(name: impl Into<String>, theta_star: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            theta_star,
        }
    }
}

impl Policy for OraclePolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self, contexts: &ContextSet) -> Result<usize, SolverError> {
        Ok(optimal_arm(&self.theta_star, contexts))
    }

    fn update(&mut self, _x: &[f64], _reward: f64) {}
}

//! Link functions mapping the linear predictor to a mean reward.

use serde::{Deserialize, Serialize};

/// Clamp radius used when none is given. With `‖θ*‖ ≤ 1` and unit-norm
/// contexts the predictor always lies in `[-1, 1]`.
pub const DEFAULT_CLAMP_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Identity,
    Logistic,
}

/// A strictly increasing link `μ` with derivative bounded in
/// `[kappa_mu, l_mu]`.
///
/// The logistic link is clamped at `±S`: inside the interval it is the usual
/// sigmoid, outside it continues linearly with slope `μ′(S)`, so its
/// derivative never drops below `μ′(S) > 0`. The antiderivative `b` is
/// extended by the matching quadratic so that `b′ = μ` everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkFunction {
    pub kind: LinkKind,
    #[serde(default = "default_clamp")]
    pub clamp_radius: f64,
}

fn default_clamp() -> f64 {
    DEFAULT_CLAMP_RADIUS
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn sigmoid_deriv(z: f64) -> f64 {
    let s = sigmoid(z);
    s * (1.0 - s)
}

/// `log(1 + eᶻ)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl LinkFunction {
    pub fn identity() -> Self {
        Self {
            kind: LinkKind::Identity,
            clamp_radius: DEFAULT_CLAMP_RADIUS,
        }
    }

    pub fn logistic() -> Self {
        Self::logistic_clamped(DEFAULT_CLAMP_RADIUS)
    }

    pub fn logistic_clamped(clamp_radius: f64) -> Self {
        assert!(clamp_radius > 0.0, "clamp radius must be positive");
        Self {
            kind: LinkKind::Logistic,
            clamp_radius,
        }
    }

    /// `μ(z)`.
    pub fn eval(&self, z: f64) -> f64 {
        match self.kind {
            LinkKind::Identity => z,
            LinkKind::Logistic => {
                let s = self.clamp_radius;
                if z > s {
                    sigmoid(s) + sigmoid_deriv(s) * (z - s)
                } else if z < -s {
                    sigmoid(-s) + sigmoid_deriv(-s) * (z + s)
                } else {
                    sigmoid(z)
                }
            }
        }
    }

    /// `μ′(z)`.
    pub fn deriv(&self, z: f64) -> f64 {
        match self.kind {
            LinkKind::Identity => 1.0,
            LinkKind::Logistic => {
                let s = self.clamp_radius;
                sigmoid_deriv(z.clamp(-s, s))
            }
        }
    }

    /// `b(z)` with `b′ = μ`.
    pub fn antideriv(&self, z: f64) -> f64 {
        match self.kind {
            LinkKind::Identity => 0.5 * z * z,
            LinkKind::Logistic => {
                let s = self.clamp_radius;
                if z > s {
                    let h = z - s;
                    softplus(s) + sigmoid(s) * h + 0.5 * sigmoid_deriv(s) * h * h
                } else if z < -s {
                    let h = z + s;
                    softplus(-s) + sigmoid(-s) * h + 0.5 * sigmoid_deriv(-s) * h * h
                } else {
                    softplus(z)
                }
            }
        }
    }

    /// Supremum of `μ′`.
    pub fn l_mu(&self) -> f64 {
        match self.kind {
            LinkKind::Identity => 1.0,
            LinkKind::Logistic => 0.25,
        }
    }

    /// Infimum of `μ′` over the whole real line.
    pub fn kappa_mu(&self) -> f64 {
        match self.kind {
            LinkKind::Identity => 1.0,
            LinkKind::Logistic => sigmoid_deriv(self.clamp_radius),
        }
    }
}

/// Free-function forms, mirroring the operation names used in the docs.
pub fn link_eval(link: &LinkFunction, z: f64) -> f64 {
    link.eval(z)
}

pub fn link_deriv(link: &LinkFunction, z: f64) -> f64 {
    link.deriv(z)
}

pub fn link_antideriv(link: &LinkFunction, z: f64) -> f64 {
    link.antideriv(z)
}

//! Reward-biased maximum-likelihood (RBMLE) index policies for linear and
//! generalized linear contextual bandits.
//!
//! - [`spd`]: SPD matrix kernel (inverse, Sherman–Morrison update, quadratic form)
//! - [`environment`]: link functions, seeded synthetic datasets, pseudo-regret
//! - [`linear`]: LinRBMLE and the LinUCB / GP-UCB / LinTS baselines
//! - [`glm`]: GLM-RBMLE and UCB-GLM
//! - [`bounds`]: closed-form regret bounds

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod environment;
pub mod error;
pub mod glm;
pub mod linear;
pub mod policy;
pub mod schedule;
pub mod spd;

pub use error::{ConfigError, DatasetIoError, SolverError};
pub use policy::{argmax_lowest, Policy};

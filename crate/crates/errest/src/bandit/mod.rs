//! Stochastic contextual bandits built on error estimation.
//!
//! [`mod@env`] and [`policy`] provide the substrate: a linear reward
//! environment, interaction logs, finite policy classes, inverse-propensity
//! estimates, covers, and the plausibly-optimal-policy filter. [`falcon`]
//! runs the inverse-gap-weighting algorithm with either a theoretical or an
//! error-estimated excess-risk term. [`pipeline`] implements the modular
//! exploration pipeline: black-box policy evaluation and reward modeling,
//! error-estimated uncertainty for arm elimination and conformal arm sets,
//! and the exploration kernel with its cover and sampling-probability
//! certificates.

pub mod env;
pub mod falcon;
pub mod pipeline;
pub mod policy;

pub use env::{epoch_schedule, InteractionRecord, LinearBanditEnv};
pub use policy::{
    cover, filter_pi_tilde, ips_policy_diff, LinearScorerPolicy, PolicyClass, StochasticPolicy,
    UniformPolicy,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BanditError {
    #[error("horizon must be at least 2, got {0}")]
    HorizonTooShort(usize),
    #[error("epoch schedule base must exceed 1, got {0}")]
    BadScheduleBase(f64),
    #[error("log (or context sample) is empty")]
    EmptyLog,
    #[error("zero propensity at sample {index}: the policy leaves the kernel's support")]
    ZeroPropensity { index: usize },
    #[error("policy class is empty")]
    EmptyPolicyClass,
    #[error("plausibly-optimal policy set is empty")]
    EmptyPiTilde,
    #[error("error block spans multiple exploration kernels (epochs {0} and {1})")]
    MixedErrKernels(usize, usize),
    #[error("conformal uncertainty is not positive ({0}); the sampling-probability bound is undefined")]
    UConNotPositive(f64),
    #[error(transparent)]
    Concentration(#[from] crate::concentration::ConcentrationError),
    #[error(transparent)]
    Ee(#[from] crate::eecore::EeError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

//! Data-driven error estimation.
//!
//! The core idea: split the sample into a *defining* part (used to form
//! estimates) and an *error* part (used only to bound errors). Because the
//! error part is independent of everything derived from the defining part,
//! a single-task high-probability width turns into a uniform bound over an
//! arbitrary class of tasks by maximizing the per-task surrogate
//!
//! ```text
//! u(h) = width(h, delta) + theta_def(h) - theta_err(h)
//! ```
//!
//! without any complexity measure of the class entering the computation.
//! An iterative localization step tightens the bound further when an
//! a-priori lower bound on the best estimand is available.
//!
//! Modules:
//! - [`concentration`]: single-task widths (normal quantile, Hoeffding,
//!   Freedman-style IPS widths).
//! - [`eecore`]: the engine — uniform max-error bounds over finite and
//!   box-parameterized classes, localization, and the multi-start
//!   projected-ascent supremum solver.
//! - [`oracles`]: brute-force references (exact Rademacher complexity by
//!   sign enumeration, a bisection normal quantile, duplicate scans) used
//!   to pin expected values in tests.
//! - [`means`]: simultaneous confidence intervals for many means, the
//!   union-bound baseline, and the correlated-Gaussian simulation.
//! - [`excessrisk`]: excess-risk bounds for supervised learning with a
//!   localization loop, a VC-style baseline, and a linear-regression
//!   simulation.
//! - [`inference`]: multiple testing with FWER control and cross-fitting
//!   (two-way switching, min-of-m resplits).
//! - [`bandit`]: contextual bandit substrate and the two algorithmic
//!   payloads (FALCON with error-estimated exploration, and a modular
//!   conformal-arm-set pipeline).

pub mod bandit;
pub mod concentration;
pub mod eecore;
pub mod excessrisk;
pub mod exec;
pub mod inference;
pub mod linalg;
pub mod means;
pub mod oracles;
pub mod rng;

pub use concentration::ConfidenceLevel;

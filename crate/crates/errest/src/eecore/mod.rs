//! The error-estimation engine.
//!
//! A [`BoundFamily`] supplies, per task handle, the surrogate upper bound
//! `u(h, delta)` and the screening statistic used by localization. The
//! engine computes the uniform bound `xi = max_h u(h, delta)` over finite
//! or box-parameterized classes ([`max_error_bound`]) and runs the
//! localization iteration ([`localize`]) that repeatedly shrinks the class
//! to `{h : -screen(h) <= xi_k - c}` and recomputes the maximum.

pub mod solver;

use crate::concentration::ConfidenceLevel;
use solver::{BoxDomain, SolverConfig, SolverError, SupDiagnostics};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EeError {
    #[error("task class is empty")]
    EmptyClass,
    #[error("error split must be nonempty")]
    EmptyErrPart,
    #[error("split fraction must lie in (0,1), got {0}")]
    BadFraction(f64),
    #[error("localization emptied the class at iteration {iteration}; the supplied lower bound is inconsistent with the data")]
    ClassEmptied { iteration: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Paired defining/error datasets with a record of how the split was made.
#[derive(Debug, Clone)]
pub struct SplitData<T> {
    def_part: Vec<T>,
    err_part: Vec<T>,
    spec: SplitSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    /// Fraction of the source sample assigned to the defining part.
    pub def_fraction: f64,
    pub rule: SplitRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRule {
    /// Defining part is the leading block of the source ordering.
    Ordered,
    /// Source was shuffled with the given seed before the ordered split.
    Shuffled { seed: u64 },
}

impl<T> SplitData<T> {
    /// Wrap pre-separated parts. The error part must be nonempty.
    pub fn from_parts(def_part: Vec<T>, err_part: Vec<T>) -> Result<Self, EeError> {
        if err_part.is_empty() {
            return Err(EeError::EmptyErrPart);
        }
        let n = def_part.len() + err_part.len();
        let spec = SplitSpec {
            def_fraction: def_part.len() as f64 / n as f64,
            rule: SplitRule::Ordered,
        };
        Ok(Self { def_part, err_part, spec })
    }

    /// First `floor(def_fraction * len)` items to the defining part, rest to
    /// the error part.
    pub fn split_ordered(mut items: Vec<T>, def_fraction: f64) -> Result<Self, EeError> {
        if !(def_fraction > 0.0 && def_fraction < 1.0) {
            return Err(EeError::BadFraction(def_fraction));
        }
        let k = ((items.len() as f64) * def_fraction).floor() as usize;
        let err_part = items.split_off(k);
        if err_part.is_empty() {
            return Err(EeError::EmptyErrPart);
        }
        Ok(Self {
            def_part: items,
            err_part,
            spec: SplitSpec { def_fraction, rule: SplitRule::Ordered },
        })
    }

    /// Shuffle with a seeded stream, then split as in [`Self::split_ordered`].
    pub fn split_shuffled(mut items: Vec<T>, def_fraction: f64, seed: u64) -> Result<Self, EeError> {
        use rand::seq::SliceRandom;
        let mut rng = crate::rng::stream_rng(seed, 0);
        items.shuffle(&mut rng);
        let mut split = Self::split_ordered(items, def_fraction)?;
        split.spec.rule = SplitRule::Shuffled { seed };
        Ok(split)
    }

    pub fn def_part(&self) -> &[T] {
        &self.def_part
    }

    pub fn err_part(&self) -> &[T] {
        &self.err_part
    }

    pub fn spec(&self) -> SplitSpec {
        self.spec
    }

    /// Exchange the roles of the two parts (used by dataset switching).
    pub fn swapped(self) -> Result<Self, EeError> {
        Self::from_parts(self.err_part, self.def_part)
    }
}

/// Per-task surrogate bounds consumed by the engine.
///
/// `u(h, delta)` is the high-probability upper bound on the error of task
/// `h`; `screen(h)` is the defining-split statistic `theta_def(h)` that the
/// localization predicate `-screen(h) <= xi - c` thresholds on.
pub trait BoundFamily: Sync {
    type Handle: Clone + Send + Sync;

    fn u(&self, h: &Self::Handle, delta: ConfidenceLevel) -> f64;

    fn screen(&self, h: &Self::Handle) -> f64;
}

/// The recipe-form bound: `u = width(h, delta) + theta_def(h) - theta_err(h)`.
///
/// `theta_def` must be computed from the defining split only and
/// `theta_err` from the error split only; the width is the single-task
/// high-probability bound on the error-split error.
pub struct PointwiseBound<H> {
    theta_def: Box<dyn Fn(&H) -> f64 + Send + Sync>,
    theta_err: Box<dyn Fn(&H) -> f64 + Send + Sync>,
    width: Box<dyn Fn(&H, ConfidenceLevel) -> f64 + Send + Sync>,
}

impl<H> PointwiseBound<H> {
    pub fn new(
        theta_def: impl Fn(&H) -> f64 + Send + Sync + 'static,
        theta_err: impl Fn(&H) -> f64 + Send + Sync + 'static,
        width: impl Fn(&H, ConfidenceLevel) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            theta_def: Box::new(theta_def),
            theta_err: Box::new(theta_err),
            width: Box::new(width),
        }
    }

    pub fn theta_def(&self, h: &H) -> f64 {
        (self.theta_def)(h)
    }

    pub fn theta_err(&self, h: &H) -> f64 {
        (self.theta_err)(h)
    }

    pub fn width(&self, h: &H, delta: ConfidenceLevel) -> f64 {
        (self.width)(h, delta)
    }
}

impl<H: Clone + Send + Sync> BoundFamily for PointwiseBound<H> {
    type Handle = H;

    fn u(&self, h: &H, delta: ConfidenceLevel) -> f64 {
        pointwise_u(self, h, delta)
    }

    fn screen(&self, h: &H) -> f64 {
        (self.theta_def)(h)
    }
}

/// `u(h, delta) = width(h, delta) + theta_def(h) - theta_err(h)`.
/// May be negative. The handle must lie in the class domain; the closures
/// themselves enforce that (out-of-domain handles are a caller bug).
pub fn pointwise_u<H>(pb: &PointwiseBound<H>, h: &H, delta: ConfidenceLevel) -> f64 {
    pb.width(h, delta) + pb.theta_def(h) - pb.theta_err(h)
}

/// Finite-class bounds tabulated at a fixed confidence level; handles are
/// indices into the tables.
#[derive(Debug, Clone)]
pub struct TabulatedBounds {
    pub u: Vec<f64>,
    pub screen: Vec<f64>,
}

impl TabulatedBounds {
    pub fn new(u: Vec<f64>, screen: Vec<f64>) -> Self {
        assert_eq!(u.len(), screen.len());
        Self { u, screen }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

impl BoundFamily for TabulatedBounds {
    type Handle = usize;

    fn u(&self, h: &usize, _delta: ConfidenceLevel) -> f64 {
        self.u[*h]
    }

    fn screen(&self, h: &usize) -> f64 {
        self.screen[*h]
    }
}

/// A finite or box-parameterized family of task handles.
pub enum TaskClass<H> {
    /// Explicit handles.
    Finite(Vec<H>),
    /// Box of parameter vectors; `embed` maps a parameter point to a handle.
    Parametric {
        domain: BoxDomain,
        embed: Arc<dyn Fn(&[f64]) -> H + Send + Sync>,
    },
}

impl<H> TaskClass<H> {
    pub fn finite(handles: Vec<H>) -> Self {
        TaskClass::Finite(handles)
    }

    pub fn parametric(domain: BoxDomain, embed: impl Fn(&[f64]) -> H + Send + Sync + 'static) -> Self {
        TaskClass::Parametric { domain, embed: Arc::new(embed) }
    }
}

impl TaskClass<Vec<f64>> {
    /// Parametric class whose handles are the parameter points themselves.
    pub fn parametric_points(domain: BoxDomain) -> Self {
        Self::parametric(domain, |p| p.to_vec())
    }
}

#[derive(Debug, Clone)]
pub struct MaxErrorBound<H> {
    /// The uniform bound `max_h u(h, delta)`. For parametric classes this is
    /// the solver's best feasible value, a lower bound on the true supremum.
    pub xi: f64,
    pub argmax: H,
    /// Index of the argmax for finite classes.
    pub argmax_index: Option<usize>,
    /// Search diagnostics for parametric classes.
    pub diagnostics: Option<SupDiagnostics>,
}

fn finite_max<B: BoundFamily>(
    handles: &[B::Handle],
    family: &B,
    delta: ConfidenceLevel,
) -> Result<(f64, usize), EeError> {
    if handles.is_empty() {
        return Err(EeError::EmptyClass);
    }
    let mut best = f64::NEG_INFINITY;
    let mut idx = 0;
    for (i, h) in handles.iter().enumerate() {
        let v = family.u(h, delta);
        if v > best {
            best = v;
            idx = i;
        }
    }
    Ok((best, idx))
}

/// Uniform bound over the class: exact maximum for finite classes, solver
/// output (with diagnostics) for parametric ones. Ties break to the lowest
/// index.
pub fn max_error_bound<B: BoundFamily>(
    class: &TaskClass<B::Handle>,
    family: &B,
    delta: ConfidenceLevel,
) -> Result<MaxErrorBound<B::Handle>, EeError> {
    max_error_bound_with(class, family, delta, &SolverConfig::default())
}

pub fn max_error_bound_with<B: BoundFamily>(
    class: &TaskClass<B::Handle>,
    family: &B,
    delta: ConfidenceLevel,
    solver: &SolverConfig,
) -> Result<MaxErrorBound<B::Handle>, EeError> {
    match class {
        TaskClass::Finite(handles) => {
            let (xi, idx) = finite_max(handles, family, delta)?;
            Ok(MaxErrorBound {
                xi,
                argmax: handles[idx].clone(),
                argmax_index: Some(idx),
                diagnostics: None,
            })
        }
        TaskClass::Parametric { domain, embed } => {
            let objective = move |p: &[f64]| family.u(&embed(p), delta);
            let result = solver::sup_parametric(&objective, domain, None, solver)?;
            Ok(MaxErrorBound {
                xi: result.value,
                argmax: embed(&result.point),
                argmax_index: None,
                diagnostics: Some(result.diagnostics),
            })
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalizeConfig {
    /// Stop when `xi_{k-1} - xi_k` falls below this.
    pub tol: f64,
    /// Hard cap on localization iterations.
    pub max_iters: usize,
    pub solver: SolverConfig,
}

impl Default for LocalizeConfig {
    fn default() -> Self {
        Self { tol: 1e-6, max_iters: 50, solver: SolverConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `xi_k >= xi_{k-1}`: shrinking stopped helping.
    NonDecreasing,
    /// Improvement fell below the tolerance.
    Tolerance,
    /// Iteration cap reached.
    MaxIterations,
}

/// Membership description of one localization level.
#[derive(Debug, Clone)]
pub enum ClassLevel {
    /// Indices (into the original finite class) retained at this level.
    Finite { retained: Vec<usize> },
    /// Cap on `-screen(h)`; a handle belongs iff `-screen(h) <= cap`.
    Parametric { screen_cap: f64 },
}

/// The sequence `(xi_k, H_k)` produced by localization.
///
/// `xi` is non-increasing by construction: each level is intersected with
/// the previous one, and the final solver value is clamped at the previous
/// level's bound (finite classes never need the clamp).
#[derive(Debug, Clone)]
pub struct LocalizationTrace<H> {
    pub xi: Vec<f64>,
    pub levels: Vec<ClassLevel>,
    pub stop: StopReason,
    /// Maximizer at the last level.
    pub argmax: H,
}

impl<H> LocalizationTrace<H> {
    /// The final bound: minimum over the trace, which equals the last entry.
    pub fn final_xi(&self) -> f64 {
        *self.xi.last().expect("trace has at least one level")
    }

    pub fn iterations(&self) -> usize {
        self.xi.len() - 1
    }
}

/// Localization (class shrinking) against an a-priori lower bound `c` on the
/// maximum estimand.
///
/// Level 0 is the full class; level k+1 keeps `{h in H_k : -screen(h) <=
/// xi_k - c}`. Iteration stops when the bound stops decreasing, when the
/// improvement drops below `cfg.tol`, or at `cfg.max_iters`. An emptied
/// level is reported as an error: it means `c` exceeds what the data
/// supports.
pub fn localize<B: BoundFamily>(
    class: &TaskClass<B::Handle>,
    family: &B,
    c: f64,
    delta: ConfidenceLevel,
    cfg: &LocalizeConfig,
) -> Result<LocalizationTrace<B::Handle>, EeError> {
    match class {
        TaskClass::Finite(handles) => localize_finite(handles, family, c, delta, cfg),
        TaskClass::Parametric { domain, embed } => {
            localize_parametric(domain, embed.clone(), family, c, delta, cfg)
        }
    }
}

fn localize_finite<B: BoundFamily>(
    handles: &[B::Handle],
    family: &B,
    c: f64,
    delta: ConfidenceLevel,
    cfg: &LocalizeConfig,
) -> Result<LocalizationTrace<B::Handle>, EeError> {
    if handles.is_empty() {
        return Err(EeError::EmptyClass);
    }
    let u: Vec<f64> = handles.iter().map(|h| family.u(h, delta)).collect();
    let neg_screen: Vec<f64> = handles.iter().map(|h| -family.screen(h)).collect();

    let max_over = |retained: &[usize]| -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut idx = retained[0];
        for &i in retained {
            if u[i] > best {
                best = u[i];
                idx = i;
            }
        }
        (best, idx)
    };

    let mut retained: Vec<usize> = (0..handles.len()).collect();
    let (mut xi_prev, mut argmax) = max_over(&retained);
    let mut xi = vec![xi_prev];
    let mut levels = vec![ClassLevel::Finite { retained: retained.clone() }];

    for k in 1..=cfg.max_iters {
        let cap = xi_prev - c;
        let next: Vec<usize> = retained.iter().copied().filter(|&i| neg_screen[i] <= cap).collect();
        if next.is_empty() {
            return Err(EeError::ClassEmptied { iteration: k });
        }
        let (xi_k, idx) = max_over(&next);
        retained = next;
        levels.push(ClassLevel::Finite { retained: retained.clone() });
        if xi_k >= xi_prev {
            // nested classes cannot raise the exact maximum; record the tie
            xi.push(xi_prev);
            return Ok(LocalizationTrace {
                xi,
                levels,
                stop: StopReason::NonDecreasing,
                argmax: handles[argmax].clone(),
            });
        }
        xi.push(xi_k);
        argmax = idx;
        if xi_prev - xi_k < cfg.tol {
            return Ok(LocalizationTrace {
                xi,
                levels,
                stop: StopReason::Tolerance,
                argmax: handles[argmax].clone(),
            });
        }
        xi_prev = xi_k;
    }
    Ok(LocalizationTrace {
        xi,
        levels,
        stop: StopReason::MaxIterations,
        argmax: handles[argmax].clone(),
    })
}

fn localize_parametric<H: Clone + Send + Sync, B: BoundFamily<Handle = H>>(
    domain: &BoxDomain,
    embed: Arc<dyn Fn(&[f64]) -> H + Send + Sync>,
    family: &B,
    c: f64,
    delta: ConfidenceLevel,
    cfg: &LocalizeConfig,
) -> Result<LocalizationTrace<H>, EeError> {
    let objective = {
        let embed = embed.clone();
        move |p: &[f64]| family.u(&embed(p), delta)
    };

    let mut solver_cfg = cfg.solver.clone();
    let first = solver::sup_parametric(&objective, domain, None, &solver_cfg)?;
    let mut xi_prev = first.value;
    let mut argmax_point = first.point;
    let mut xi = vec![xi_prev];
    let mut levels = vec![ClassLevel::Parametric { screen_cap: f64::INFINITY }];
    let mut cap = f64::INFINITY;

    for k in 1..=cfg.max_iters {
        cap = cap.min(xi_prev - c);
        let constraint = {
            let embed = embed.clone();
            move |p: &[f64]| -family.screen(&embed(p)) <= cap
        };
        // reuse the previous maximizer as a warm start
        solver_cfg.warm_starts = vec![argmax_point.clone()];
        let result = match solver::sup_parametric(&objective, domain, Some(&constraint), &solver_cfg) {
            Ok(r) => r,
            Err(SolverError::InfeasibleEverywhere) => {
                return Err(EeError::ClassEmptied { iteration: k })
            }
            Err(e) => return Err(e.into()),
        };
        levels.push(ClassLevel::Parametric { screen_cap: cap });
        if result.value >= xi_prev {
            // solver noise cannot certify an increase over a nested class;
            // clamp to keep the trace non-increasing
            xi.push(xi_prev);
            return Ok(LocalizationTrace {
                xi,
                levels,
                stop: StopReason::NonDecreasing,
                argmax: embed(&argmax_point),
            });
        }
        let xi_k = result.value;
        xi.push(xi_k);
        argmax_point = result.point;
        if xi_prev - xi_k < cfg.tol {
            return Ok(LocalizationTrace {
                xi,
                levels,
                stop: StopReason::Tolerance,
                argmax: embed(&argmax_point),
            });
        }
        xi_prev = xi_k;
    }
    Ok(LocalizationTrace {
        xi,
        levels,
        stop: StopReason::MaxIterations,
        argmax: embed(&argmax_point),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn delta(d: f64) -> ConfidenceLevel {
        ConfidenceLevel::new(d).unwrap()
    }

    #[test]
    fn pointwise_u_examples() {
        let pb: PointwiseBound<usize> = PointwiseBound::new(|_| 0.2, |_| 0.2, |_, _| 0.5);
        assert_abs_diff_eq!(pointwise_u(&pb, &0, delta(0.1)), 0.5, epsilon = 1e-15);

        let pb: PointwiseBound<usize> = PointwiseBound::new(|_| 1.0, |_| 0.4, |_, _| 0.0);
        assert_abs_diff_eq!(pointwise_u(&pb, &0, delta(0.1)), 0.6, epsilon = 1e-15);

        // compose with the Hoeffding width
        let w = crate::concentration::hoeffding_excess_width(1.0, 50, delta(0.05))
            .unwrap()
            .value;
        let pb: PointwiseBound<usize> = PointwiseBound::new(|_| 0.1, |_| 0.3, move |_, _| w);
        assert_abs_diff_eq!(pointwise_u(&pb, &0, delta(0.05)), w - 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(pointwise_u(&pb, &0, delta(0.05)), 0.14616604, epsilon = 5e-6);
    }

    #[test]
    fn finite_max_examples() {
        let fam = TabulatedBounds::new(vec![0.3, 0.7], vec![0.0, 0.0]);
        let class = TaskClass::finite(vec![0usize, 1]);
        let b = max_error_bound(&class, &fam, delta(0.1)).unwrap();
        assert_abs_diff_eq!(b.xi, 0.7, epsilon = 1e-15);
        assert_eq!(b.argmax_index, Some(1));

        let fam = TabulatedBounds::new(vec![0.42], vec![0.0]);
        let class = TaskClass::finite(vec![0usize]);
        let b = max_error_bound(&class, &fam, delta(0.1)).unwrap();
        assert_abs_diff_eq!(b.xi, 0.42, epsilon = 1e-15);

        let empty = TaskClass::<usize>::finite(vec![]);
        assert!(matches!(max_error_bound(&empty, &fam, delta(0.1)), Err(EeError::EmptyClass)));
    }

    #[test]
    fn finite_max_matches_linear_scan_oracle() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(99, 0);
        for _ in 0..100 {
            let n = rng.gen_range(1..200);
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let fam = TabulatedBounds::new(u.clone(), vec![0.0; n]);
            let class = TaskClass::finite((0..n).collect::<Vec<usize>>());
            let b = max_error_bound(&class, &fam, delta(0.1)).unwrap();
            let (oracle, idx) = crate::oracles::brute_max_error(&u).unwrap();
            assert_eq!(b.xi.to_bits(), oracle.to_bits());
            assert_eq!(b.argmax_index, Some(idx));
        }
    }

    #[test]
    fn finite_max_tie_break_lowest_index() {
        let fam = TabulatedBounds::new(vec![0.7, 0.7, 0.1], vec![0.0; 3]);
        let class = TaskClass::finite(vec![0usize, 1, 2]);
        let b = max_error_bound(&class, &fam, delta(0.1)).unwrap();
        assert_eq!(b.argmax_index, Some(0));
    }

    #[test]
    fn parametric_max_quadratic() {
        let pb: PointwiseBound<Vec<f64>> =
            PointwiseBound::new(|_| 0.0, |_| 0.0, |h: &Vec<f64>, _| 1.0 - (h[0] - 0.3) * (h[0] - 0.3));
        let class = TaskClass::parametric_points(BoxDomain::new(vec![0.0], vec![1.0]).unwrap());
        let b = max_error_bound(&class, &pb, delta(0.1)).unwrap();
        assert!((b.xi - 1.0).abs() <= 1e-3);
        assert!((b.argmax[0] - 0.3).abs() <= 1e-3);
        assert!(b.diagnostics.is_some());
    }

    #[test]
    fn localize_two_task_example() {
        // u = {0.2, 0.8}, screens 0.5 and -0.9: level 1 drops the second task
        let fam = TabulatedBounds::new(vec![0.2, 0.8], vec![0.5, -0.9]);
        let class = TaskClass::finite(vec![0usize, 1]);
        let tr = localize(&class, &fam, 0.0, delta(0.1), &LocalizeConfig::default()).unwrap();
        assert_eq!(tr.xi, vec![0.8, 0.2, 0.2]);
        assert_eq!(tr.stop, StopReason::NonDecreasing);
        match &tr.levels[1] {
            ClassLevel::Finite { retained } => assert_eq!(retained, &vec![0]),
            _ => panic!("finite level expected"),
        }
        assert_abs_diff_eq!(tr.final_xi(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn localize_vacuous_lower_bound() {
        let fam = TabulatedBounds::new(vec![0.2, 0.8, -0.1], vec![0.5, -0.9, 0.3]);
        let class = TaskClass::finite(vec![0usize, 1, 2]);
        let tr = localize(&class, &fam, -1e6, delta(0.1), &LocalizeConfig::default()).unwrap();
        // constraint never binds: one no-op iteration, then a stop
        assert_eq!(tr.xi, vec![0.8, 0.8]);
        assert_eq!(tr.stop, StopReason::NonDecreasing);
        match &tr.levels[1] {
            ClassLevel::Finite { retained } => assert_eq!(retained.len(), 3),
            _ => panic!(),
        }
    }

    #[test]
    fn localize_singleton() {
        let fam = TabulatedBounds::new(vec![0.37], vec![0.0]);
        let class = TaskClass::finite(vec![0usize]);
        let tr = localize(&class, &fam, 0.0, delta(0.1), &LocalizeConfig::default()).unwrap();
        assert_eq!(tr.xi, vec![0.37, 0.37]);
    }

    #[test]
    fn localize_emptied_class_is_an_error() {
        // c far above anything the data supports: every screen fails at level 1
        let fam = TabulatedBounds::new(vec![0.1, 0.2], vec![-5.0, -6.0]);
        let class = TaskClass::finite(vec![0usize, 1]);
        let err = localize(&class, &fam, 10.0, delta(0.1), &LocalizeConfig::default());
        assert!(matches!(err, Err(EeError::ClassEmptied { iteration: 1 })));
    }

    #[test]
    fn localize_nested_and_monotone() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(5, 0);
        for _ in 0..50 {
            let n = rng.gen_range(1..40);
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let screen: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fam = TabulatedBounds::new(u, screen);
            let class = TaskClass::finite((0..n).collect::<Vec<usize>>());
            match localize(&class, &fam, 0.0, delta(0.1), &LocalizeConfig::default()) {
                Ok(tr) => {
                    for w in tr.xi.windows(2) {
                        assert!(w[1] <= w[0] + 1e-15);
                    }
                    let mut prev: Option<Vec<usize>> = None;
                    for level in &tr.levels {
                        let ClassLevel::Finite { retained } = level else { panic!() };
                        if let Some(p) = &prev {
                            assert!(retained.iter().all(|i| p.contains(i)));
                        }
                        prev = Some(retained.clone());
                    }
                }
                Err(EeError::ClassEmptied { .. }) => {} // legal under c=0 with all-negative screens
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn localize_parametric_matches_finite_enumeration() {
        // piecewise-smooth u over [0,1]; dense finite grid as the oracle
        let u_fn = |x: f64| 0.9 - (x - 0.2).abs() + 0.3 * (7.0 * x).sin();
        let screen_fn = |x: f64| x - 0.55; // screens out x < 0.55 - cap... -screen = 0.55 - x
        let pb: PointwiseBound<Vec<f64>> = PointwiseBound::new(
            move |h: &Vec<f64>| screen_fn(h[0]),
            |_| 0.0,
            move |h: &Vec<f64>, _| u_fn(h[0]),
        );
        // u = width + theta_def - theta_err = u_fn + screen_fn
        let class = TaskClass::parametric_points(BoxDomain::new(vec![0.0], vec![1.0]).unwrap());
        let tr = localize(&class, &pb, 0.0, delta(0.1), &LocalizeConfig::default()).unwrap();

        // finite oracle on a dense grid
        let grid: Vec<usize> = (0..=4000).collect();
        let u: Vec<f64> = grid.iter().map(|&i| {
            let x = i as f64 / 4000.0;
            u_fn(x) + screen_fn(x)
        }).collect();
        let screen: Vec<f64> = grid.iter().map(|&i| screen_fn(i as f64 / 4000.0)).collect();
        let fam = TabulatedBounds::new(u, screen);
        let fclass = TaskClass::finite(grid);
        let ftr = localize(&fclass, &fam, 0.0, delta(0.1), &LocalizeConfig::default()).unwrap();

        assert!((tr.final_xi() - ftr.final_xi()).abs() <= 2e-3,
            "parametric {} vs grid {}", tr.final_xi(), ftr.final_xi());
        for w in tr.xi.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn split_data_invariants() {
        let s = SplitData::split_ordered((0..10).collect(), 0.5).unwrap();
        assert_eq!(s.def_part(), &[0, 1, 2, 3, 4]);
        assert_eq!(s.err_part(), &[5, 6, 7, 8, 9]);
        assert!(SplitData::<i32>::from_parts(vec![1], vec![]).is_err());
        let sw = s.swapped().unwrap();
        assert_eq!(sw.def_part(), &[5, 6, 7, 8, 9]);

        // odd length: remainder goes to the error part
        let s = SplitData::split_ordered((0..13).collect(), 0.5).unwrap();
        assert_eq!(s.def_part().len(), 6);
        assert_eq!(s.err_part().len(), 7);
    }

    #[test]
    fn shuffled_split_is_seeded_and_partitioning() {
        let a = SplitData::split_shuffled((0..20).collect(), 0.5, 11).unwrap();
        let b = SplitData::split_shuffled((0..20).collect(), 0.5, 11).unwrap();
        assert_eq!(a.def_part(), b.def_part());
        assert_eq!(a.spec().rule, SplitRule::Shuffled { seed: 11 });
        let mut all: Vec<i32> = a.def_part().iter().chain(a.err_part()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<i32>>());
        let c = SplitData::split_shuffled((0..20).collect(), 0.5, 12).unwrap();
        assert_ne!(a.def_part(), c.def_part());
    }

    #[test]
    fn surrogate_distribution_tracks_errors() {
        // with e and e_err i.i.d. standard normal vectors and constant width b:
        // Var(u - b) = 2 and Cov(u_h, u_h') = 2 Cov(e_h, e_h')
        use rand_distr::StandardNormal;
        use rand::Rng;
        let reps = 10_000;
        let rho = 0.6_f64; // correlation between the two tasks' errors
        let mut us = Vec::with_capacity(reps);
        for rep in 0..reps {
            let mut rng = crate::rng::stream_rng(42, rep as u64);
            let shared: f64 = rng.sample(StandardNormal);
            let mut e = [0.0_f64; 2];
            let mut e_err = [0.0_f64; 2];
            for i in 0..2 {
                let own: f64 = rng.sample(StandardNormal);
                e[i] = rho.sqrt() * shared + (1.0 - rho).sqrt() * own;
            }
            let shared_err: f64 = rng.sample(StandardNormal);
            for i in 0..2 {
                let own: f64 = rng.sample(StandardNormal);
                e_err[i] = rho.sqrt() * shared_err + (1.0 - rho).sqrt() * own;
            }
            // u - b = theta_def - theta_err with theta_def := e, theta_err := e_err
            us.push([e[0] - e_err[0], e[1] - e_err[1]]);
        }
        let mean0: f64 = us.iter().map(|v| v[0]).sum::<f64>() / reps as f64;
        let mean1: f64 = us.iter().map(|v| v[1]).sum::<f64>() / reps as f64;
        let var0: f64 = us.iter().map(|v| (v[0] - mean0).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let cov: f64 = us
            .iter()
            .map(|v| (v[0] - mean0) * (v[1] - mean1))
            .sum::<f64>()
            / (reps - 1) as f64;
        assert!((var0 - 2.0).abs() <= 0.1, "var {var0}");
        assert!((cov - 2.0 * rho).abs() <= 0.1, "cov {cov}");
    }

    #[test]
    fn uniform_bound_coverage_finite_class() {
        // simulable instance: errors drawn directly, width = one-sided normal
        // quantile; coverage of the max must be at least 1 - delta (minus MC slack)
        use rand_distr::StandardNormal;
        use rand::Rng;
        let d = delta(0.1);
        let z = crate::concentration::normal_quantile(1.0 - d.delta()).unwrap();
        let n_tasks = 50;
        let reps = 500;
        let mut covered = 0;
        for rep in 0..reps {
            let mut rng = crate::rng::stream_rng(1234, rep as u64);
            let e: Vec<f64> = (0..n_tasks).map(|_| rng.sample(StandardNormal)).collect();
            let e_err: Vec<f64> = (0..n_tasks).map(|_| rng.sample(StandardNormal)).collect();
            let u: Vec<f64> = e.iter().zip(&e_err).map(|(a, b)| z + a - b).collect();
            let fam = TabulatedBounds::new(u, vec![0.0; n_tasks]);
            let class = TaskClass::finite((0..n_tasks).collect::<Vec<usize>>());
            let xi = max_error_bound(&class, &fam, d).unwrap().xi;
            let (max_e, _) = crate::oracles::brute_max_error(&e).unwrap();
            if xi >= max_e {
                covered += 1;
            }
        }
        let freq = covered as f64 / reps as f64;
        let se = (0.9 * 0.1 / reps as f64).sqrt();
        assert!(freq >= 0.9 - 3.0 * se, "coverage {freq}");
    }
}

//! Excess-risk bounds for supervised learning.
//!
//! For a fitted model `g_def` and a candidate `g`, the suboptimality
//! estimand is `theta_g = risk(g_def) - risk(g)`; its defining- and
//! error-split estimates are average loss differences. The surrogate
//!
//! ```text
//! u(g) = theta_err(g) - theta_def(g) + 2M sqrt(ln(1/delta) / (2n))
//! ```
//!
//! bounds the estimation error of `theta_def(g)`, and because the best
//! in-class model has `theta >= 0`, localization with lower bound `c = 0`
//! applies: classes shrink to `{g : -theta_def(g) <= xi_k}` and the final
//! `xi` bounds the excess risk of `g_def` whenever `g_def` is the
//! empirical risk minimizer.

use crate::concentration::{hoeffding_excess_width, ConfidenceLevel};
use crate::eecore::solver::{sup_parametric, BoxDomain, SolverConfig};
use crate::eecore::{
    localize, BoundFamily, ClassLevel, EeError, LocalizationTrace, LocalizeConfig, SplitData,
    TaskClass,
};
use crate::exec;
use crate::linalg;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("both split parts must be nonempty")]
    EmptySplitPart,
    #[error("split parts must have equal size (def {0}, err {1})")]
    UnequalSplit(usize, usize),
    #[error("need at least dim samples or a positive ridge weight")]
    TooFewSamples,
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Ee(#[from] EeError),
    #[error(transparent)]
    Concentration(#[from] crate::concentration::ConcentrationError),
}

/// Feature vector and bounded label.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Linear predictor given by its coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel(pub Vec<f64>);

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(b, v)| b * v).sum()
    }
}

/// Parametric model family: linear predictors with coefficients in a box,
/// predictions clipped to `[-clip, clip]`, squared loss capped at
/// `loss_range = (clip + label_bound)^2`.
#[derive(Debug, Clone)]
pub struct ModelClass {
    pub domain: BoxDomain,
    pub clip: f64,
    pub loss_range: f64,
}

impl ModelClass {
    pub fn new(domain: BoxDomain, clip: f64, label_bound: f64) -> Self {
        let loss_range = (clip + label_bound) * (clip + label_bound);
        Self { domain, clip, loss_range }
    }

    /// Clipped squared loss, verified within `[0, loss_range]`.
    pub fn loss(&self, x: &[f64], y: f64, g: &LinearModel) -> f64 {
        let pred = g.predict(x).clamp(-self.clip, self.clip);
        let l = (pred - y) * (pred - y);
        l.clamp(0.0, self.loss_range)
    }

    pub fn task_class(&self) -> TaskClass<LinearModel> {
        TaskClass::parametric(self.domain.clone(), |p| LinearModel(p.to_vec()))
    }
}

/// Defining- and error-split estimates of `risk(g_def) - risk(g)`:
/// averages of per-sample loss differences.
pub fn theta_hats(
    g: &LinearModel,
    g_def: &LinearModel,
    class: &ModelClass,
    split: &SplitData<LabeledSample>,
) -> Result<(f64, f64), RiskError> {
    if split.def_part().is_empty() || split.err_part().is_empty() {
        return Err(RiskError::EmptySplitPart);
    }
    let avg = |part: &[LabeledSample]| {
        part.iter()
            .map(|s| class.loss(&s.x, s.y, g_def) - class.loss(&s.x, s.y, g))
            .sum::<f64>()
            / part.len() as f64
    };
    Ok((avg(split.def_part()), avg(split.err_part())))
}

/// Surrogate bound for one candidate under an even split of `2n` samples.
pub fn u_excess(
    g: &LinearModel,
    g_def: &LinearModel,
    class: &ModelClass,
    split: &SplitData<LabeledSample>,
    delta: ConfidenceLevel,
) -> Result<f64, RiskError> {
    let (n_def, n_err) = (split.def_part().len(), split.err_part().len());
    if n_def != n_err {
        return Err(RiskError::UnequalSplit(n_def, n_err));
    }
    let (theta_def, theta_err) = theta_hats(g, g_def, class, split)?;
    let width = hoeffding_excess_width(class.loss_range, n_err, delta)?.value;
    Ok(theta_err - theta_def + width)
}

/// Bound family over candidate models. The defining-split losses of
/// `g_def` are precomputed once; each `u` evaluation costs one pass over
/// the data for the candidate.
pub struct RiskBounds<'a> {
    class: &'a ModelClass,
    split: &'a SplitData<LabeledSample>,
    def_base: Vec<f64>,
    err_base: Vec<f64>,
    width: f64,
}

impl<'a> RiskBounds<'a> {
    /// Even-split constructor: the width is the Hoeffding term at the
    /// error-part size.
    pub fn new(
        class: &'a ModelClass,
        g_def: &LinearModel,
        split: &'a SplitData<LabeledSample>,
        delta: ConfidenceLevel,
    ) -> Result<Self, RiskError> {
        let (n_def, n_err) = (split.def_part().len(), split.err_part().len());
        if n_def != n_err {
            return Err(RiskError::UnequalSplit(n_def, n_err));
        }
        let width = hoeffding_excess_width(class.loss_range, n_err, delta)?.value;
        Ok(Self::with_width(class, g_def, split, width))
    }

    /// Custom width (used when the split is uneven and the caller derives
    /// the width from the error-part size alone).
    pub fn with_width(
        class: &'a ModelClass,
        g_def: &LinearModel,
        split: &'a SplitData<LabeledSample>,
        width: f64,
    ) -> Self {
        let def_base = split
            .def_part()
            .iter()
            .map(|s| class.loss(&s.x, s.y, g_def))
            .collect();
        let err_base = split
            .err_part()
            .iter()
            .map(|s| class.loss(&s.x, s.y, g_def))
            .collect();
        Self { class, split, def_base, err_base, width }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    fn thetas(&self, g: &LinearModel) -> (f64, f64) {
        let part = |samples: &[LabeledSample], base: &[f64]| {
            samples
                .iter()
                .zip(base)
                .map(|(s, b)| b - self.class.loss(&s.x, s.y, g))
                .sum::<f64>()
                / samples.len() as f64
        };
        (
            part(self.split.def_part(), &self.def_base),
            part(self.split.err_part(), &self.err_base),
        )
    }
}

impl BoundFamily for RiskBounds<'_> {
    type Handle = LinearModel;

    // suboptimality direction: the error-split gap leads, so the surrogate
    // is width + theta_err - theta_def
    fn u(&self, g: &LinearModel, _delta: ConfidenceLevel) -> f64 {
        let (theta_def, theta_err) = self.thetas(g);
        self.width + theta_err - theta_def
    }

    fn screen(&self, g: &LinearModel) -> f64 {
        self.thetas(g).0
    }
}

#[derive(Debug, Clone)]
pub struct RiskBoundConfig {
    pub localize: LocalizeConfig,
    /// Tolerance for the empirical-minimizer check `max_g theta_def(g) <= tol`.
    pub erm_tol: f64,
}

impl Default for RiskBoundConfig {
    fn default() -> Self {
        Self { localize: LocalizeConfig::default(), erm_tol: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct ExcessRiskReport {
    pub g_def: LinearModel,
    pub trace: LocalizationTrace<LinearModel>,
    /// `max_{g in final class} theta_def(g) + xi`: valid for any `g_def`.
    pub bound_general: f64,
    /// `min_k xi_k`: valid when `g_def` minimizes the defining-split risk.
    pub bound_erm: f64,
    /// Whether the minimizer precondition held: `max_g theta_def(g) <= tol`.
    pub erm_valid: bool,
    pub vc_bound: f64,
}

/// Localized excess-risk bound with lower bound `c = 0`.
pub fn excess_risk_bound(
    class: &TaskClass<LinearModel>,
    loss: &ModelClass,
    g_def: &LinearModel,
    split: &SplitData<LabeledSample>,
    delta: ConfidenceLevel,
    cfg: &RiskBoundConfig,
) -> Result<ExcessRiskReport, RiskError> {
    let bounds = RiskBounds::new(loss, g_def, split, delta)?;
    let trace = localize(class, &bounds, 0.0, delta, &cfg.localize)?;
    let bound_erm = trace.final_xi();

    // largest defining-split suboptimality over the final class
    let max_theta = match (class, trace.levels.last().expect("nonempty trace")) {
        (TaskClass::Finite(handles), ClassLevel::Finite { retained }) => retained
            .iter()
            .map(|&i| bounds.screen(&handles[i]))
            .fold(f64::NEG_INFINITY, f64::max),
        (TaskClass::Parametric { domain, embed }, ClassLevel::Parametric { screen_cap }) => {
            let cap = *screen_cap;
            let objective = |p: &[f64]| bounds.screen(&embed(p));
            let constraint = |p: &[f64]| -bounds.screen(&embed(p)) <= cap;
            let mut solver = cfg.localize.solver.clone();
            solver.warm_starts = vec![g_def.0.clone(), trace.argmax.0.clone()];
            sup_parametric(&objective, domain, Some(&constraint), &solver)
                .map_err(EeError::from)?
                .value
        }
        _ => unreachable!("trace level kind matches class kind"),
    };

    Ok(ExcessRiskReport {
        g_def: g_def.clone(),
        bound_general: max_theta + bound_erm,
        bound_erm,
        erm_valid: max_theta <= cfg.erm_tol,
        vc_bound: vc_baseline(g_def.0.len(), split.def_part().len(), delta),
        trace,
    })
}

/// Parametric-rate baseline `2 (d + ln(1/delta)) / n_def`.
pub fn vc_baseline(d: usize, n_def: usize, delta: ConfidenceLevel) -> f64 {
    2.0 * (d as f64 + (1.0 / delta.delta()).ln()) / n_def.max(1) as f64
}

/// Least squares with optional ridge weight.
pub fn fit_erm_linear(samples: &[LabeledSample], ridge: f64) -> Result<LinearModel, RiskError> {
    let dim = samples.first().ok_or(RiskError::TooFewSamples)?.x.len();
    if ridge <= 0.0 && samples.len() < dim {
        return Err(RiskError::TooFewSamples);
    }
    let xs: Vec<Vec<f64>> = samples.iter().map(|s| s.x.clone()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.y).collect();
    Ok(LinearModel(linalg::ridge_fit(&xs, &ys, ridge, dim)?))
}

/// Linear data-generating process: unit-norm contexts, `y = x . beta + u`
/// with uniform noise on `[-noise_half_width, noise_half_width]`.
#[derive(Debug, Clone)]
pub struct LinearDgp {
    pub beta: Vec<f64>,
    pub noise_half_width: f64,
}

impl LinearDgp {
    /// Coefficients drawn standard normal and rescaled to `beta_norm`.
    pub fn random<R: Rng>(dim: usize, beta_norm: f64, noise_half_width: f64, rng: &mut R) -> Self {
        let mut beta: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        for b in &mut beta {
            *b *= beta_norm / norm;
        }
        Self { beta, noise_half_width }
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn sample_one<R: Rng>(&self, rng: &mut R) -> LabeledSample {
        let d = self.dim();
        let mut x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut x {
            *v /= norm;
        }
        let noise = rng.gen_range(-self.noise_half_width..=self.noise_half_width);
        let y = self.beta.iter().zip(&x).map(|(b, v)| b * v).sum::<f64>() + noise;
        LabeledSample { x, y }
    }

    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<LabeledSample> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// Exact excess risk of an (unclipped) linear model under this process:
    /// for unit-sphere contexts, `E[(x . (b - beta))^2] = |b - beta|^2 / d`.
    /// Valid as long as predictions stay inside the clipping range.
    pub fn true_excess(&self, model: &LinearModel) -> f64 {
        let d = self.dim() as f64;
        model
            .0
            .iter()
            .zip(&self.beta)
            .map(|(b, t)| (b - t) * (b - t))
            .sum::<f64>()
            / d
    }
}

#[derive(Debug, Clone)]
pub struct RiskExperimentConfig {
    /// Total sample sizes; each is split evenly into defining/error parts.
    pub ns: Vec<usize>,
    pub reps: usize,
    pub dim: usize,
    pub delta: ConfidenceLevel,
    pub seed: u64,
    pub solver_restarts: usize,
    pub solver_iters: usize,
}

impl RiskExperimentConfig {
    pub fn new(ns: Vec<usize>, reps: usize, delta: ConfidenceLevel, seed: u64) -> Self {
        Self { ns, reps, dim: 10, delta, seed, solver_restarts: 4, solver_iters: 60 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RiskExperimentRow {
    pub n: usize,
    pub rep: usize,
    pub true_excess: f64,
    pub bound_erm: f64,
    pub bound_general: f64,
    pub vc_bound: f64,
    pub iterations: usize,
    /// Whether the localization trace was non-increasing throughout.
    pub trace_monotone: bool,
}

/// Linear-regression reproduction: draw data from a fresh random linear
/// process per replicate, fit the least-squares model on the defining half,
/// and record the localized bound against the exact excess risk and the
/// parametric-rate baseline.
pub fn risk_experiment(cfg: &RiskExperimentConfig) -> Result<Vec<RiskExperimentRow>, RiskError> {
    let total = cfg.ns.len() * cfg.reps;
    let rows: Vec<Result<RiskExperimentRow, RiskError>> = exec::map_indexed(total, |j| {
        let n = cfg.ns[j / cfg.reps];
        let rep = j % cfg.reps;
        let mut rng = crate::rng::stream_rng(cfg.seed, j as u64);
        let dgp = LinearDgp::random(cfg.dim, 0.5, 0.5, &mut rng);
        let samples = dgp.sample(n, &mut rng);
        let split = SplitData::split_ordered(samples, 0.5)?;

        let domain = BoxDomain::symmetric(cfg.dim, 1.0).map_err(EeError::from)?;
        let loss = ModelClass::new(domain, 1.0, 1.0);
        let mut g_def = fit_erm_linear(split.def_part(), 0.0)?;
        // keep the fitted model inside the candidate box
        for (b, (lo, hi)) in g_def
            .0
            .iter_mut()
            .zip(loss.domain.lo().iter().zip(loss.domain.hi()))
        {
            *b = b.clamp(*lo, *hi);
        }

        let mut bound_cfg = RiskBoundConfig::default();
        bound_cfg.localize.solver = SolverConfig {
            restarts: cfg.solver_restarts,
            max_iters: cfg.solver_iters,
            seed: cfg.seed ^ (j as u64).wrapping_mul(0x9e3779b97f4a7c15),
            ..SolverConfig::default()
        };
        bound_cfg.localize.solver.warm_starts = vec![g_def.0.clone()];

        let report = excess_risk_bound(
            &loss.task_class(),
            &loss,
            &g_def,
            &split,
            cfg.delta,
            &bound_cfg,
        )?;
        let trace_monotone = report.trace.xi.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        Ok(RiskExperimentRow {
            n,
            rep,
            true_excess: dgp.true_excess(&g_def),
            bound_erm: report.bound_erm,
            bound_general: report.bound_general,
            vc_bound: report.vc_bound,
            iterations: report.trace.iterations(),
            trace_monotone,
        })
    });
    rows.into_iter().collect()
}

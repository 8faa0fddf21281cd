//! Multiple hypothesis testing with FWER control, and cross-fitting.
//!
//! Testing: weight a task's surrogate bound by `b(h)` and restrict the
//! tested set by an indicator `iota(h)` (both built from the defining
//! split only). The weighted maximum `xi_w = max_{iota=1} b(h) u(h)` then
//! rejects `theta_h = 0` in favor of `theta_h > 0` whenever
//! `theta_def(h) > sigma_def(h) xi_w / (b(h) sqrt(n))`, with family-wise
//! error at most `delta` for any weight choice.
//!
//! Cross-fitting: run the split in both directions at level `delta/2` and
//! report the smaller bound; more generally take the minimum of `m`
//! resplit bounds at `delta/m` each.

use crate::concentration::{normal_quantile, ConfidenceLevel};
use crate::exec;
use crate::means::{equicorrelated_normals, mean_stats, u_mean, MeanTaskStats, MeansError};
use rand_distr::StandardNormal;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("weight vectors must match the task count")]
    WeightLengthMismatch,
    #[error("weight b({index}) must be positive where iota is set, got {value}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("resplit count must be at least 1")]
    NoResplits,
    #[error("replicate count must be at least 1")]
    NoReplicates,
    #[error(transparent)]
    Means(#[from] MeansError),
}

/// Screening indicator and positive weights over a finite task list.
///
/// Both functions may depend only on the defining split; build them before
/// touching the error split.
#[derive(Debug, Clone)]
pub struct WeightPair {
    pub iota: Vec<bool>,
    pub b: Vec<f64>,
}

impl WeightPair {
    pub fn flat(n: usize) -> Self {
        Self { iota: vec![true; n], b: vec![1.0; n] }
    }

    fn validate(&self, n_tasks: usize) -> Result<(), InferenceError> {
        if self.iota.len() != n_tasks || self.b.len() != n_tasks {
            return Err(InferenceError::WeightLengthMismatch);
        }
        for (i, (&on, &w)) in self.iota.iter().zip(&self.b).enumerate() {
            if on && !(w > 0.0) {
                return Err(InferenceError::NonPositiveWeight { index: i, value: w });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Rejections {
    /// Weighted uniform bound; `None` when no task passed the screen (the
    /// bound is undefined in that case and nothing is tested).
    pub xi_w: Option<f64>,
    pub rejected: Vec<usize>,
}

/// Weighted multiple testing: reject `theta_h = 0` for every screened task
/// whose defining-split mean strictly exceeds its weighted threshold.
pub fn reject_set(
    tasks: &[(MeanTaskStats, MeanTaskStats)],
    weights: &WeightPair,
    delta: ConfidenceLevel,
) -> Result<Rejections, InferenceError> {
    weights.validate(tasks.len())?;
    let mut xi_w = f64::NEG_INFINITY;
    let mut any = false;
    for (i, (d, e)) in tasks.iter().enumerate() {
        if weights.iota[i] {
            any = true;
            xi_w = xi_w.max(weights.b[i] * u_mean(d, e, delta)?);
        }
    }
    if !any {
        return Ok(Rejections { xi_w: None, rejected: Vec::new() });
    }
    let mut rejected = Vec::new();
    for (i, (d, _)) in tasks.iter().enumerate() {
        if !weights.iota[i] {
            continue;
        }
        let threshold = d.sigma_hat / (d.n as f64).sqrt() * xi_w / weights.b[i];
        // strict inequality: a mean exactly at the threshold is not rejected
        if d.theta_hat > threshold {
            rejected.push(i);
        }
    }
    Ok(Rejections { xi_w: Some(xi_w), rejected })
}

/// Default weight choice: screen tasks whose mean already clears the
/// single-test bar `sigma z_delta / sqrt(n)`, and weight by
/// `sigma * min(1, 1/|theta|)` to put the screened tests on a common scale.
pub fn default_weights(def_stats: &[MeanTaskStats], delta: ConfidenceLevel) -> WeightPair {
    let z = normal_quantile(1.0 - delta.delta()).expect("level in (0,1)");
    let mut iota = Vec::with_capacity(def_stats.len());
    let mut b = Vec::with_capacity(def_stats.len());
    for s in def_stats {
        iota.push(s.theta_hat > s.sigma_hat * z / (s.n as f64).sqrt());
        let scale = if s.theta_hat.abs() > 0.0 {
            (1.0_f64).min(1.0 / s.theta_hat.abs())
        } else {
            1.0
        };
        b.push(s.sigma_hat * scale);
    }
    WeightPair { iota, b }
}

/// The two directional bounds of a two-way switch and their minimum.
#[derive(Debug, Clone, Copy)]
pub struct SwitchedBound {
    pub xi_12: f64,
    pub xi_21: f64,
    pub xi_min: f64,
}

/// Run a bound builder in both split directions at level `delta/2` and
/// take the minimum.
pub fn switched_bound<S, E>(
    fold1: &S,
    fold2: &S,
    builder: impl Fn(&S, &S, ConfidenceLevel) -> Result<f64, E>,
    delta: ConfidenceLevel,
) -> Result<SwitchedBound, E> {
    let half = delta.scaled(2.0);
    let xi_12 = builder(fold1, fold2, half)?;
    let xi_21 = builder(fold2, fold1, half)?;
    Ok(SwitchedBound { xi_12, xi_21, xi_min: xi_12.min(xi_21) })
}

/// Minimum of `m` resplit bounds, each computed at level `delta/m`.
pub fn kfold_bound<E>(
    m: usize,
    builder: impl Fn(usize, ConfidenceLevel) -> Result<f64, E>,
    delta: ConfidenceLevel,
) -> Result<f64, KfoldError<E>> {
    if m == 0 {
        return Err(KfoldError::NoResplits);
    }
    let level = delta.scaled(m as f64);
    let mut best = f64::INFINITY;
    for i in 0..m {
        best = best.min(builder(i, level).map_err(KfoldError::Builder)?);
    }
    Ok(best)
}

#[derive(Debug, Error)]
pub enum KfoldError<E> {
    #[error("resplit count must be at least 1")]
    NoResplits,
    #[error("bound builder failed")]
    Builder(#[source] E),
}

// ---- experiment drivers ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightChoice {
    Flat,
    Default,
}

#[derive(Debug, Clone)]
pub struct FwerConfig {
    pub n_tasks: usize,
    /// Observations per split part for each task.
    pub n: usize,
    pub reps: usize,
    pub delta: ConfidenceLevel,
    pub weights: WeightChoice,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct FwerRow {
    pub rep: usize,
    pub any_rejection: bool,
    pub n_rejected: usize,
}

/// Global-null simulation: every task mean is zero, so any rejection is a
/// family-wise error.
pub fn fwer_experiment(cfg: &FwerConfig) -> Result<Vec<FwerRow>, InferenceError> {
    if cfg.reps == 0 {
        return Err(InferenceError::NoReplicates);
    }
    let rows: Vec<Result<FwerRow, InferenceError>> = exec::map_indexed(cfg.reps, |rep| {
        let mut rng = crate::rng::stream_rng(cfg.seed, rep as u64);
        let mut tasks = Vec::with_capacity(cfg.n_tasks);
        for _ in 0..cfg.n_tasks {
            let draw = |rng: &mut rand_chacha::ChaCha12Rng| -> Vec<f64> {
                (0..cfg.n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            };
            let d = mean_stats(&draw(&mut rng))?;
            let e = mean_stats(&draw(&mut rng))?;
            tasks.push((d, e));
        }
        let weights = match cfg.weights {
            WeightChoice::Flat => WeightPair::flat(cfg.n_tasks),
            WeightChoice::Default => {
                let def: Vec<MeanTaskStats> = tasks.iter().map(|(d, _)| *d).collect();
                default_weights(&def, cfg.delta)
            }
        };
        let r = reject_set(&tasks, &weights, cfg.delta)?;
        Ok(FwerRow {
            rep,
            any_rejection: !r.rejected.is_empty(),
            n_rejected: r.rejected.len(),
        })
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct CrossfitConfig {
    pub alphas: Vec<f64>,
    pub n_tasks: usize,
    pub reps: usize,
    pub delta: ConfidenceLevel,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct CrossfitRow {
    pub alpha: f64,
    pub rep: usize,
    pub xi_12: f64,
    pub xi_21: f64,
    pub xi_min: f64,
    /// Realized max error of the direction that achieved the minimum: the
    /// quantity the reported bound is accountable for.
    pub true_max: f64,
}

/// Two-way switching on the correlated-task simulation: per replicate, two
/// independent equicorrelated error vectors play the roles of the folds,
/// each direction's bound is the one-sided critical value at `delta/2`
/// plus the maximized fold gap, and the reported direction is the one with
/// the smaller bound.
pub fn crossfit_experiment(cfg: &CrossfitConfig) -> Result<Vec<CrossfitRow>, InferenceError> {
    if cfg.reps == 0 {
        return Err(InferenceError::NoReplicates);
    }
    let total = cfg.alphas.len() * cfg.reps;
    let rows: Vec<CrossfitRow> = exec::map_indexed(total, |j| {
        let alpha = cfg.alphas[j / cfg.reps];
        let rep = j % cfg.reps;
        let mut rng = crate::rng::stream_rng(cfg.seed, j as u64);
        let fold1 = equicorrelated_normals(alpha, cfg.n_tasks, &mut rng);
        let fold2 = equicorrelated_normals(alpha, cfg.n_tasks, &mut rng);
        let builder = |def: &Vec<f64>, err: &Vec<f64>, level: ConfidenceLevel| {
            let z = normal_quantile(1.0 - level.delta()).expect("level in (0,1)");
            let gap = def
                .iter()
                .zip(err)
                .map(|(a, b)| a - b)
                .fold(f64::NEG_INFINITY, f64::max);
            Ok::<f64, InferenceError>(z + gap)
        };
        let sb = switched_bound(&fold1, &fold2, builder, cfg.delta).expect("builder infallible");
        let max1 = fold1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let max2 = fold2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let true_max = if sb.xi_12 <= sb.xi_21 { max1 } else { max2 };
        CrossfitRow { alpha, rep, xi_12: sb.xi_12, xi_21: sb.xi_21, xi_min: sb.xi_min, true_max }
    });
    Ok(rows)
}

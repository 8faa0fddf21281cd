//! Simultaneous confidence intervals for many means.
//!
//! Each task h carries a studentized error `sqrt(n) |theta_hat - theta| /
//! sigma_hat`. Splitting the data and bounding the error-split error by the
//! normal critical value gives the per-task surrogate
//!
//! ```text
//! u(h) = sqrt(n) |theta_def - theta_err| / sigma_def + sigma_err * z_{delta/2} / sigma_def
//! ```
//!
//! whose maximum `xi` yields intervals `theta_def ± sigma_def * xi / sqrt(n)`
//! that hold jointly — no union-bound correction, and the bound adapts to
//! correlation across tasks.

use crate::concentration::{normal_quantile, ConfidenceLevel};
use crate::eecore::{max_error_bound, TabulatedBounds, TaskClass};
use crate::exec;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeansError {
    #[error("need at least 2 observations, got {0}")]
    TooFewObservations(usize),
    #[error("defining-split standard deviation is zero; degenerate task must be filtered by the caller")]
    DegenerateTask,
    #[error("paired stats must share the sample count (def {0}, err {1})")]
    MismatchedCounts(usize, usize),
    #[error("task list is empty")]
    NoTasks,
    #[error("subgroup probability {p} must lie in [1/{m}, 1]")]
    BadSubgroupProbability { p: f64, m: f64 },
    #[error("replicate count must be at least 1")]
    NoReplicates,
    #[error(transparent)]
    Ee(#[from] crate::eecore::EeError),
}

/// Sample mean, standard deviation (n-1 denominator), and count for one task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanTaskStats {
    pub theta_hat: f64,
    pub sigma_hat: f64,
    pub n: usize,
}

/// Summary statistics of one task's sample.
pub fn mean_stats(sample: &[f64]) -> Result<MeanTaskStats, MeansError> {
    let n = sample.len();
    if n < 2 {
        return Err(MeansError::TooFewObservations(n));
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    let ss = sample.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>();
    Ok(MeanTaskStats {
        theta_hat: mean,
        sigma_hat: (ss / (n - 1) as f64).sqrt(),
        n,
    })
}

/// Studentized surrogate bound for one task.
pub fn u_mean(
    def: &MeanTaskStats,
    err: &MeanTaskStats,
    delta: ConfidenceLevel,
) -> Result<f64, MeansError> {
    if def.n != err.n {
        return Err(MeansError::MismatchedCounts(def.n, err.n));
    }
    if def.sigma_hat <= 0.0 {
        return Err(MeansError::DegenerateTask);
    }
    let z = normal_quantile(1.0 - delta.delta() / 2.0).expect("level in (0,1)");
    let n = def.n as f64;
    Ok(n.sqrt() * (def.theta_hat - err.theta_hat).abs() / def.sigma_hat
        + err.sigma_hat * z / def.sigma_hat)
}

#[derive(Debug, Clone)]
pub struct SimultaneousCis {
    /// The shared adjustment `max_h u(h)`.
    pub xi: f64,
    pub argmax: usize,
    /// One interval per task, centered at the defining-split mean.
    pub intervals: Vec<(f64, f64)>,
}

/// Simultaneous intervals for all tasks: every interval uses the same
/// data-driven adjustment `xi`.
pub fn simultaneous_cis(
    tasks: &[(MeanTaskStats, MeanTaskStats)],
    delta: ConfidenceLevel,
) -> Result<SimultaneousCis, MeansError> {
    if tasks.is_empty() {
        return Err(MeansError::NoTasks);
    }
    let u: Result<Vec<f64>, MeansError> =
        tasks.iter().map(|(d, e)| u_mean(d, e, delta)).collect();
    let u = u?;
    let fam = TabulatedBounds::new(u, vec![0.0; tasks.len()]);
    let class = TaskClass::finite((0..tasks.len()).collect::<Vec<usize>>());
    let bound = max_error_bound(&class, &fam, delta)?;
    let intervals = tasks
        .iter()
        .map(|(d, _)| {
            let half = d.sigma_hat / (d.n as f64).sqrt() * bound.xi;
            (d.theta_hat - half, d.theta_hat + half)
        })
        .collect();
    Ok(SimultaneousCis {
        xi: bound.xi,
        argmax: bound.argmax_index.unwrap_or(0),
        intervals,
    })
}

/// The classical union-bound critical value for `n_tasks` simultaneous
/// intervals: `z_{1 - delta/n}` one-sided, `z_{1 - delta/(2n)}` two-sided.
pub fn union_bound_adjustment(
    n_tasks: usize,
    delta: ConfidenceLevel,
    two_sided: bool,
) -> Result<f64, MeansError> {
    if n_tasks == 0 {
        return Err(MeansError::NoTasks);
    }
    let tail = if two_sided { 2.0 * n_tasks as f64 } else { n_tasks as f64 };
    Ok(normal_quantile(1.0 - delta.delta() / tail).expect("level in (0,1)"))
}

/// Subgroup membership spec with known inclusion probability `p >= 1/m`.
#[derive(Clone)]
pub struct SubgroupSpec {
    pub membership: std::sync::Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
    pub p: f64,
    pub m: f64,
}

impl SubgroupSpec {
    pub fn new(
        membership: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
        p: f64,
        m: f64,
    ) -> Result<Self, MeansError> {
        if !(m >= 1.0) || !(p >= 1.0 / m) || !(p <= 1.0) {
            return Err(MeansError::BadSubgroupProbability { p, m });
        }
        Ok(Self { membership: std::sync::Arc::new(membership), p, m })
    }
}

/// Importance-weighted subgroup score `t * 1{x in subgroup} / p`, whose mean
/// over the population equals the subgroup conditional mean.
pub fn subgroup_value(t: f64, x: &[f64], spec: &SubgroupSpec) -> f64 {
    if (spec.membership)(x) {
        t / spec.p
    } else {
        0.0
    }
}

/// Equicorrelated standard normal vector: pairwise correlation `alpha`
/// across coordinates, standard normal marginals. `alpha = 0` gives i.i.d.
/// draws, `alpha = 1` a single shared value.
pub fn equicorrelated_normals<R: Rng>(alpha: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let shared: f64 = rng.sample(StandardNormal);
    let a = alpha.sqrt();
    let b = (1.0 - alpha).sqrt();
    (0..n)
        .map(|_| {
            let own: f64 = rng.sample(StandardNormal);
            a * shared + b * own
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FiniteSimConfig {
    pub alphas: Vec<f64>,
    pub n_tasks: usize,
    pub reps: usize,
    pub delta: ConfidenceLevel,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct FiniteSimRow {
    pub alpha: f64,
    pub rep: usize,
    pub true_max: f64,
    pub ee_bound: f64,
    pub union_bound: f64,
}

/// Correlated-task simulation comparing the data-driven adjustment to the
/// union bound.
///
/// Per replicate, the per-task errors and their error-split counterparts are
/// two independent equicorrelated normal vectors; the data-driven bound is
/// `z_{1-delta} + max_h (e_h - e_err_h)` (the one-sided width plus the
/// maximized surrogate gap), the baseline is the union-bound critical value
/// `z_{1-delta/n}`, and the target is `max_h e_h`.
pub fn finite_sim(cfg: &FiniteSimConfig) -> Result<Vec<FiniteSimRow>, MeansError> {
    if cfg.reps == 0 {
        return Err(MeansError::NoReplicates);
    }
    if cfg.n_tasks == 0 {
        return Err(MeansError::NoTasks);
    }
    let z = normal_quantile(1.0 - cfg.delta.delta()).expect("level in (0,1)");
    let union = union_bound_adjustment(cfg.n_tasks, cfg.delta, false)?;
    let total = cfg.alphas.len() * cfg.reps;
    let rows = exec::map_indexed(total, |j| {
        let alpha_idx = j / cfg.reps;
        let rep = j % cfg.reps;
        let alpha = cfg.alphas[alpha_idx];
        let mut rng = crate::rng::stream_rng(cfg.seed, j as u64);
        let errs = equicorrelated_normals(alpha, cfg.n_tasks, &mut rng);
        let errs_err = equicorrelated_normals(alpha, cfg.n_tasks, &mut rng);
        // surrogate per task: width z plus the def/err gap
        let u: Vec<f64> = errs.iter().zip(&errs_err).map(|(e, ee)| z + e - ee).collect();
        let fam = TabulatedBounds::new(u, vec![0.0; cfg.n_tasks]);
        let class = TaskClass::finite((0..cfg.n_tasks).collect::<Vec<usize>>());
        let ee_bound = max_error_bound(&class, &fam, cfg.delta).expect("nonempty").xi;
        let (true_max, _) = crate::oracles::brute_max_error(&errs).expect("nonempty");
        FiniteSimRow { alpha, rep, true_max, ee_bound, union_bound: union }
    });
    Ok(rows)
}

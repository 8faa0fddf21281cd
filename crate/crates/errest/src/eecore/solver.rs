//! Supremum search over a box domain: coarse grid scan plus multi-start
//! projected gradient ascent with central finite differences and
//! backtracking line search.
//!
//! The result is a certified *lower* bound on the true supremum (the best
//! feasible value actually evaluated); diagnostics report every restart
//! endpoint so callers can judge search quality.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("box domain needs matching, nonempty, finite bounds with lo < hi per coordinate")]
    BadDomain,
    #[error("constraint infeasible at every probe point")]
    InfeasibleEverywhere,
}

/// Axis-aligned box of parameter vectors.
#[derive(Debug, Clone)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, SolverError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(SolverError::BadDomain);
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(SolverError::BadDomain);
            }
        }
        Ok(Self { lo, hi })
    }

    /// Symmetric box `[-half, half]^dim`.
    pub fn symmetric(dim: usize, half: f64) -> Result<Self, SolverError> {
        Self::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn project(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lo[i], self.hi[i]);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| rng.gen_range(*l..=*h))
            .collect()
    }

    pub fn max_side(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max)
    }

    /// Lattice of at most `budget` points, evenly spaced per coordinate.
    /// Degenerates to the center when the budget allows only one point per axis.
    fn grid(&self, budget: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let budget = budget.max(1);
        // largest per-axis count g with g^d <= budget
        let mut g = 1usize;
        while (g + 1).checked_pow(d as u32).map_or(false, |t| t <= budget) {
            g += 1;
        }
        if g == 1 {
            let center: Vec<f64> = self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect();
            return vec![center];
        }
        let mut points = Vec::with_capacity(g.pow(d as u32));
        let mut idx = vec![0usize; d];
        loop {
            let p: Vec<f64> = (0..d)
                .map(|i| self.lo[i] + (self.hi[i] - self.lo[i]) * idx[i] as f64 / (g - 1) as f64)
                .collect();
            points.push(p);
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < g {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == d {
                    return points;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Number of ascent restarts (warm starts count against this).
    pub restarts: usize,
    /// Ascent iterations per restart.
    pub max_iters: usize,
    /// Total budget for the coarse grid scan.
    pub grid_budget: usize,
    /// Seed for the random restart points.
    pub seed: u64,
    /// Extra start points (e.g. incumbents from a previous localization level).
    pub warm_starts: Vec<Vec<f64>>,
    /// Stop a restart when the step shrinks below this.
    pub step_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 200,
            grid_budget: 1024,
            seed: 0,
            warm_starts: Vec::new(),
            step_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestartRecord {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub value: f64,
    pub iters: usize,
}

#[derive(Debug, Clone)]
pub struct SupDiagnostics {
    pub restarts: Vec<RestartRecord>,
    /// Best feasible value seen during the grid scan.
    pub grid_value: f64,
    pub evaluations: usize,
    pub feasible_probes: usize,
}

#[derive(Debug, Clone)]
pub struct SupResult {
    pub value: f64,
    pub point: Vec<f64>,
    pub diagnostics: SupDiagnostics,
}

struct Eval<'a> {
    objective: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    constraint: Option<&'a (dyn Fn(&[f64]) -> bool + Sync)>,
    count: usize,
}

impl<'a> Eval<'a> {
    fn feasible(&self, x: &[f64]) -> bool {
        self.constraint.map_or(true, |c| c(x))
    }

    fn value(&mut self, x: &[f64]) -> f64 {
        self.count += 1;
        (self.objective)(x)
    }
}

/// Central finite differences with step `1e-5 * (1 + |x_i|)`; probe points
/// are clamped into the box, so the estimate is one-sided on active bounds.
fn fd_gradient(eval: &mut Eval<'_>, domain: &BoxDomain, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-5 * (1.0 + x[i].abs());
        let up = (x[i] + h).min(domain.hi()[i]);
        let dn = (x[i] - h).max(domain.lo()[i]);
        if up <= dn {
            continue;
        }
        probe[i] = up;
        let fu = eval.value(&probe);
        probe[i] = dn;
        let fd = eval.value(&probe);
        probe[i] = x[i];
        g[i] = (fu - fd) / (up - dn);
    }
    g
}

/// Best feasible value of `objective` over `domain`, subject to an optional
/// membership constraint. Infeasible line-search points are rejected rather
/// than projected, so every reported value is feasible.
pub fn sup_parametric(
    objective: &(dyn Fn(&[f64]) -> f64 + Sync),
    domain: &BoxDomain,
    constraint: Option<&(dyn Fn(&[f64]) -> bool + Sync)>,
    cfg: &SolverConfig,
) -> Result<SupResult, SolverError> {
    let mut eval = Eval { objective, constraint, count: 0 };
    let mut rng = crate::rng::stream_rng(cfg.seed, 0);

    // Candidate starts: warm starts, grid scan, then random fills.
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for w in &cfg.warm_starts {
        let mut p = w.clone();
        domain.project(&mut p);
        starts.push(p);
    }
    let mut best_val = f64::NEG_INFINITY;
    let mut best_pt: Option<Vec<f64>> = None;
    let mut grid_value = f64::NEG_INFINITY;
    let mut feasible_probes = 0usize;

    for p in domain.grid(cfg.grid_budget) {
        if eval.feasible(&p) {
            feasible_probes += 1;
            let v = eval.value(&p);
            if v > grid_value {
                grid_value = v;
                if v > best_val {
                    best_val = v;
                    best_pt = Some(p.clone());
                }
            }
        }
    }
    if let Some(p) = &best_pt {
        starts.push(p.clone());
    }
    while starts.len() < cfg.restarts.max(1) {
        starts.push(domain.sample(&mut rng));
    }

    let mut restarts = Vec::with_capacity(starts.len());
    for start in starts {
        if !eval.feasible(&start) {
            continue;
        }
        feasible_probes += 1;
        let mut x = start.clone();
        let mut fx = eval.value(&x);
        if fx > best_val {
            best_val = fx;
            best_pt = Some(x.clone());
        }
        let mut iters = 0;
        for _ in 0..cfg.max_iters {
            iters += 1;
            let g = fd_gradient(&mut eval, domain, &x);
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gnorm < 1e-14 {
                break;
            }
            let mut t = 0.25 * domain.max_side() / gnorm;
            let mut moved = false;
            for _ in 0..40 {
                let mut cand: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + t * gi).collect();
                domain.project(&mut cand);
                let step: f64 = cand
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if step < cfg.step_tol {
                    break;
                }
                if eval.feasible(&cand) {
                    let fc = eval.value(&cand);
                    if fc > fx {
                        x = cand;
                        fx = fc;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if fx > best_val {
            best_val = fx;
            best_pt = Some(x.clone());
        }
        restarts.push(RestartRecord { start, end: x, value: fx, iters });
    }

    match best_pt {
        Some(point) => Ok(SupResult {
            value: best_val,
            point,
            diagnostics: SupDiagnostics {
                restarts,
                grid_value,
                evaluations: eval.count,
                feasible_probes,
            },
        }),
        None => Err(SolverError::InfeasibleEverywhere),
    }
}

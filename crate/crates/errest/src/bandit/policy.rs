//! Deterministic policy classes, randomized kernels, inverse-propensity
//! estimates, covers, and the plausibly-optimal-policy filter.

use super::env::InteractionRecord;
use super::BanditError;
use rand::Rng;
use rand_distr::StandardNormal;

/// Deterministic policy: pick the arm whose linear scorer is largest
/// (lowest index on ties).
#[derive(Debug, Clone)]
pub struct LinearScorerPolicy {
    /// One weight vector per arm.
    pub weights: Vec<Vec<f64>>,
}

impl LinearScorerPolicy {
    pub fn action(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (a, w) in self.weights.iter().enumerate() {
            let v: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum();
            if v > best_v {
                best_v = v;
                best = a;
            }
        }
        best
    }
}

/// Finite class of deterministic policies drawn from a seeded grid of
/// unit-norm linear scorers.
#[derive(Debug, Clone)]
pub struct PolicyClass {
    pub policies: Vec<LinearScorerPolicy>,
}

impl PolicyClass {
    pub fn seeded_grid(n_policies: usize, dim: usize, arms: usize, seed: u64) -> Self {
        let mut rng = crate::rng::stream_rng(seed, 0);
        let mut policies = Vec::with_capacity(n_policies);
        for _ in 0..n_policies {
            let mut weights = Vec::with_capacity(arms);
            for _ in 0..arms {
                let mut w: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                for v in &mut w {
                    *v /= norm;
                }
                weights.push(w);
            }
            policies.push(LinearScorerPolicy { weights });
        }
        Self { policies }
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self { policies: indices.iter().map(|&i| self.policies[i].clone()).collect() }
    }

    /// Action table: `table[p][c]` is policy p's arm at context c.
    pub fn actions_on(&self, contexts: &[Vec<f64>]) -> Vec<Vec<usize>> {
        self.policies
            .iter()
            .map(|pi| contexts.iter().map(|x| pi.action(x)).collect())
            .collect()
    }
}

/// Randomized exploration policy: a probability kernel over arms per context.
pub trait StochasticPolicy: Send + Sync {
    fn arm_probs(&self, x: &[f64]) -> Vec<f64>;

    fn prob(&self, x: &[f64], arm: usize) -> f64 {
        self.arm_probs(x)[arm]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UniformPolicy {
    pub arms: usize,
}

impl StochasticPolicy for UniformPolicy {
    fn arm_probs(&self, _x: &[f64]) -> Vec<f64> {
        vec![1.0 / self.arms as f64; self.arms]
    }
}

/// Unbiased inverse-propensity estimate of `R(pi) - R(pi_ref)` from logged
/// rounds: the average of `r * (1{pi(x)=a} - 1{pi_ref(x)=a}) / p(a|x)`.
pub fn ips_policy_diff(
    pi: &LinearScorerPolicy,
    pi_ref: &LinearScorerPolicy,
    log: &[InteractionRecord],
) -> Result<f64, BanditError> {
    if log.is_empty() {
        return Err(BanditError::EmptyLog);
    }
    let mut acc = 0.0;
    for (i, rec) in log.iter().enumerate() {
        if !(rec.propensity > 0.0) {
            return Err(BanditError::ZeroPropensity { index: i });
        }
        let hit_pi = (pi.action(&rec.x) == rec.arm) as u8 as f64;
        let hit_ref = (pi_ref.action(&rec.x) == rec.arm) as u8 as f64;
        acc += rec.reward * (hit_pi - hit_ref) / rec.propensity;
    }
    Ok(acc / log.len() as f64)
}

/// Empirical cover `V(p, pi) = avg_x 1 / p(pi(x)|x)`, the variance proxy
/// for evaluating `pi` from data logged by `p`. A zero propensity at any
/// sampled context means `pi` leaves the kernel's support.
pub fn cover(
    kernel: &dyn StochasticPolicy,
    pi: &LinearScorerPolicy,
    contexts: &[Vec<f64>],
) -> Result<f64, BanditError> {
    if contexts.is_empty() {
        return Err(BanditError::EmptyLog);
    }
    let mut acc = 0.0;
    for (i, x) in contexts.iter().enumerate() {
        let p = kernel.prob(x, pi.action(x));
        if !(p > 0.0) {
            return Err(BanditError::ZeroPropensity { index: i });
        }
        acc += 1.0 / p;
    }
    Ok(acc / contexts.len() as f64)
}

/// Indices of policies sampled with probability at least `1/m_bounds[t]`
/// by every epoch's kernel at every check context (logged plus probe).
pub fn filter_pi_tilde(
    class: &PolicyClass,
    log: &[InteractionRecord],
    kernels: &[&dyn StochasticPolicy],
    m_bounds: &[f64],
    probe_contexts: &[Vec<f64>],
) -> Vec<usize> {
    assert_eq!(kernels.len(), m_bounds.len());
    let contexts: Vec<&Vec<f64>> = log.iter().map(|r| &r.x).chain(probe_contexts.iter()).collect();
    // probability tables per epoch, evaluated once per context
    let tables: Vec<Vec<Vec<f64>>> = kernels
        .iter()
        .map(|k| contexts.iter().map(|x| k.arm_probs(x)).collect())
        .collect();
    let mut surviving = Vec::new();
    'policy: for (idx, pi) in class.policies.iter().enumerate() {
        let actions: Vec<usize> = contexts.iter().map(|x| pi.action(x)).collect();
        for (t, table) in tables.iter().enumerate() {
            let floor = 1.0 / m_bounds[t];
            for (c, &a) in actions.iter().enumerate() {
                if table[c][a] < floor - 1e-12 {
                    continue 'policy;
                }
            }
        }
        surviving.push(idx);
    }
    surviving
}

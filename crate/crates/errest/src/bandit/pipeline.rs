//! Modular exploration pipeline for stochastic contextual bandits.
//!
//! At each epoch boundary the logged data is split into a defining block
//! and a one-kernel error block (itself cut into three parts). Black-box
//! oracles fitted on the defining block — an inverse-propensity policy
//! evaluator, a per-arm reward regressor, and a per-arm confidence-interval
//! estimator — are wrapped in error estimation to produce two uncertainty
//! levels: `u_elim` for arm elimination and `u_con` for conformal arm
//! sets. The next exploration kernel mixes a uniform draw over the
//! conformal set at threshold `beta_max / eta` with an exact integral of
//! uniform draws over the nested conformal sets, and ships with two
//! certificates: a bound on the inverse sampling probability of the
//! optimal policy and a bound on its cover.

use super::env::{epoch_schedule, InteractionRecord, LinearBanditEnv};
use super::policy::{
    cover, filter_pi_tilde, ips_policy_diff, LinearScorerPolicy, PolicyClass, StochasticPolicy,
    UniformPolicy,
};
use super::BanditError;
use crate::concentration::{freedman_ips_width, ConfidenceLevel};
use crate::eecore::{localize, LocalizeConfig, TabulatedBounds, TaskClass};
use crate::exec;
use crate::linalg;
use rand::Rng;
use std::sync::Arc;

/// Estimated conditional expected reward.
pub trait RewardModel: Send + Sync {
    fn reward(&self, x: &[f64], arm: usize) -> f64;
}

/// Per-arm ridge regression with predictions clipped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct PerArmRidge {
    betas: Vec<Vec<f64>>,
}

impl PerArmRidge {
    pub fn fit(
        records: &[InteractionRecord],
        dim: usize,
        arms: usize,
        ridge: f64,
    ) -> Result<Self, BanditError> {
        let mut betas = Vec::with_capacity(arms);
        for a in 0..arms {
            let xs: Vec<Vec<f64>> =
                records.iter().filter(|r| r.arm == a).map(|r| r.x.clone()).collect();
            if xs.is_empty() {
                betas.push(vec![0.0; dim]);
                continue;
            }
            let ys: Vec<f64> =
                records.iter().filter(|r| r.arm == a).map(|r| r.reward).collect();
            betas.push(linalg::ridge_fit(&xs, &ys, ridge, dim)?);
        }
        Ok(Self { betas })
    }
}

impl RewardModel for PerArmRidge {
    fn reward(&self, x: &[f64], arm: usize) -> f64 {
        let raw: f64 = self.betas[arm].iter().zip(x).map(|(b, v)| b * v).sum();
        raw.clamp(0.0, 1.0)
    }
}

/// Per-arm confidence-interval estimator: ridge mean with a leverage-based
/// width scaled by the residual deviation (plus a small floor). Arms with
/// no observations get the midpoint mean and a unit width.
#[derive(Debug, Clone)]
pub struct PerArmCi {
    betas: Vec<Vec<f64>>,
    chol: Vec<Option<Vec<f64>>>,
    resid_sd: Vec<f64>,
    dim: usize,
    width_floor: f64,
}

impl PerArmCi {
    pub fn fit(
        records: &[InteractionRecord],
        dim: usize,
        arms: usize,
        ridge: f64,
        width_floor: f64,
    ) -> Result<Self, BanditError> {
        let mut betas = Vec::with_capacity(arms);
        let mut chol = Vec::with_capacity(arms);
        let mut resid_sd = Vec::with_capacity(arms);
        for a in 0..arms {
            let xs: Vec<&InteractionRecord> = records.iter().filter(|r| r.arm == a).collect();
            if xs.is_empty() {
                betas.push(vec![0.0; dim]);
                chol.push(None);
                resid_sd.push(1.0);
                continue;
            }
            let mut gram = vec![0.0; dim * dim];
            let mut rhs = vec![0.0; dim];
            for r in &xs {
                for i in 0..dim {
                    rhs[i] += r.x[i] * r.reward;
                    for j in 0..dim {
                        gram[i * dim + j] += r.x[i] * r.x[j];
                    }
                }
            }
            for i in 0..dim {
                gram[i * dim + i] += ridge;
            }
            let l = linalg::cholesky(&gram, dim).ok_or(linalg::LinalgError::Singular)?;
            let beta = linalg::chol_solve(&l, dim, &rhs);
            let mse = xs
                .iter()
                .map(|r| {
                    let pred: f64 = beta.iter().zip(&r.x).map(|(b, v)| b * v).sum();
                    (pred - r.reward) * (pred - r.reward)
                })
                .sum::<f64>()
                / xs.len() as f64;
            betas.push(beta);
            chol.push(Some(l));
            resid_sd.push(mse.sqrt());
        }
        Ok(Self { betas, chol, resid_sd, dim, width_floor })
    }

    pub fn mean(&self, x: &[f64], arm: usize) -> f64 {
        let raw: f64 = self.betas[arm].iter().zip(x).map(|(b, v)| b * v).sum();
        raw.clamp(0.0, 1.0)
    }

    pub fn width(&self, x: &[f64], arm: usize) -> f64 {
        match &self.chol[arm] {
            Some(l) => {
                let lev = linalg::inv_quad_form(l, self.dim, x).max(0.0).sqrt();
                self.resid_sd[arm] * lev + self.width_floor
            }
            None => 1.0,
        }
    }

    pub fn arms(&self) -> usize {
        self.betas.len()
    }
}

/// Split of the input log: defining block, the three error parts, and the
/// error block's kernel metadata.
#[derive(Debug)]
pub struct PipelineSplit<'a> {
    pub s_def: &'a [InteractionRecord],
    pub s_err_elim: &'a [InteractionRecord],
    pub s_err_con: &'a [InteractionRecord],
    pub s_err_b: &'a [InteractionRecord],
    /// Epoch id of the (single) kernel that produced the error block.
    pub err_epoch: usize,
    /// Optimal-cover bound carried by the error block's records.
    pub alpha_err: f64,
}

/// First `floor((1-lambda) tau)` rounds to the defining block, the rest
/// into three consecutive parts of size `floor(n/3)` each (remainder to
/// the last). The error block must have been collected under one kernel.
pub fn pipeline_split(
    log: &[InteractionRecord],
    lambda: f64,
) -> Result<PipelineSplit<'_>, BanditError> {
    if log.is_empty() {
        return Err(BanditError::EmptyLog);
    }
    let tau = log.len();
    let n_def = ((1.0 - lambda) * tau as f64).floor() as usize;
    let (s_def, s_err) = log.split_at(n_def);
    if s_err.is_empty() {
        return Err(BanditError::EmptyLog);
    }
    let err_epoch = s_err[0].epoch;
    for r in s_err {
        if r.epoch != err_epoch {
            return Err(BanditError::MixedErrKernels(err_epoch, r.epoch));
        }
    }
    let third = s_err.len() / 3;
    let (s_err_elim, rest) = s_err.split_at(third);
    let (s_err_con, s_err_b) = rest.split_at(third);
    Ok(PipelineSplit {
        s_def,
        s_err_elim,
        s_err_con,
        s_err_b,
        err_epoch,
        alpha_err: s_err[0].alpha_bound,
    })
}

/// Inverse-propensity value table: `R(pi)` estimated for every policy in
/// the class from one logged block.
pub fn ips_value_table(
    policies: &PolicyClass,
    log: &[InteractionRecord],
) -> Result<Vec<f64>, BanditError> {
    if log.is_empty() {
        return Err(BanditError::EmptyLog);
    }
    let mut values = vec![0.0; policies.len()];
    for (i, rec) in log.iter().enumerate() {
        if !(rec.propensity > 0.0) {
            return Err(BanditError::ZeroPropensity { index: i });
        }
        let w = rec.reward / rec.propensity;
        for (p, pi) in policies.policies.iter().enumerate() {
            if pi.action(&rec.x) == rec.arm {
                values[p] += w;
            }
        }
    }
    for v in &mut values {
        *v /= log.len() as f64;
    }
    Ok(values)
}

#[derive(Debug)]
pub struct ElimInputs<'a> {
    pub policies: &'a PolicyClass,
    /// Class indices of the plausibly optimal policies.
    pub pi_tilde: &'a [usize],
    /// Black-box policy-value estimates per class policy.
    pub r_elim: &'a [f64],
    /// Class index of the evaluator's favorite; must be in `pi_tilde`.
    pub pi_elim: usize,
    pub s_err_elim: &'a [InteractionRecord],
    /// Estimated cover of the favorite under the error block's kernel.
    pub cover_pi_elim: f64,
    pub alpha_err: f64,
}

/// Uncertainty level for arm elimination: Freedman width at the error-part
/// size plus localized inverse-propensity gaps, with lower bound zero.
pub fn cb_elim_error(inp: &ElimInputs<'_>, delta: ConfidenceLevel) -> Result<f64, BanditError> {
    if inp.pi_tilde.is_empty() {
        return Err(BanditError::EmptyPiTilde);
    }
    if inp.s_err_elim.is_empty() {
        return Err(BanditError::EmptyLog);
    }
    let width = freedman_ips_width(
        delta,
        inp.s_err_elim.len(),
        inp.cover_pi_elim.max(1.0),
        inp.alpha_err.max(1.0),
    )?
    .value;
    let favorite = &inp.policies.policies[inp.pi_elim];
    let mut u = Vec::with_capacity(inp.pi_tilde.len());
    let mut screen = Vec::with_capacity(inp.pi_tilde.len());
    for &j in inp.pi_tilde {
        let theta_def = inp.r_elim[j] - inp.r_elim[inp.pi_elim];
        let theta_err = ips_policy_diff(&inp.policies.policies[j], favorite, inp.s_err_elim)?;
        u.push(width + theta_err - theta_def);
        screen.push(theta_def);
    }
    let fam = TabulatedBounds::new(u, screen);
    let class = TaskClass::finite((0..inp.pi_tilde.len()).collect::<Vec<usize>>());
    let trace = localize(&class, &fam, 0.0, delta, &LocalizeConfig::default())?;
    Ok(trace.final_xi())
}

pub struct ConInputs<'a> {
    pub policies: &'a PolicyClass,
    pub pi_tilde: &'a [usize],
    pub f_hat: &'a dyn RewardModel,
    /// Class index of the model-greedy policy; must be in `pi_tilde`.
    pub pi_con: usize,
    pub s_err_con: &'a [InteractionRecord],
    pub cover_pi_con: f64,
    pub alpha_err: f64,
}

/// Uncertainty level for conformal arm sets: localization at `delta/2`
/// over model-based gaps, plus the Hoeffding term for having estimated the
/// context average from the error part.
pub fn cb_con_error(inp: &ConInputs<'_>, delta: ConfidenceLevel) -> Result<f64, BanditError> {
    if inp.pi_tilde.is_empty() {
        return Err(BanditError::EmptyPiTilde);
    }
    if inp.s_err_con.is_empty() {
        return Err(BanditError::EmptyLog);
    }
    let n = inp.s_err_con.len();
    let half = delta.scaled(2.0);
    let width =
        freedman_ips_width(half, n, inp.cover_pi_con.max(1.0), inp.alpha_err.max(1.0))?.value;
    let favorite = &inp.policies.policies[inp.pi_con];
    let model_gap = |pi: &LinearScorerPolicy| -> f64 {
        inp.s_err_con
            .iter()
            .map(|r| {
                inp.f_hat.reward(&r.x, pi.action(&r.x))
                    - inp.f_hat.reward(&r.x, favorite.action(&r.x))
            })
            .sum::<f64>()
            / n as f64
    };
    let mut u = Vec::with_capacity(inp.pi_tilde.len());
    let mut screen = Vec::with_capacity(inp.pi_tilde.len());
    for &j in inp.pi_tilde {
        let pi = &inp.policies.policies[j];
        let theta_fx = model_gap(pi);
        let theta_err = ips_policy_diff(pi, favorite, inp.s_err_con)?;
        u.push(width + theta_err - theta_fx);
        screen.push(theta_fx);
    }
    let fam = TabulatedBounds::new(u, screen);
    let class = TaskClass::finite((0..inp.pi_tilde.len()).collect::<Vec<usize>>());
    let trace = localize(&class, &fam, 0.0, half, &LocalizeConfig::default())?;
    let hoeffding = (2.0 * (2.0 / delta.delta()).ln() / n as f64).sqrt();
    Ok(trace.final_xi() + hoeffding)
}

/// Per-context arm sets from a doubling UCB rule over the CI estimator,
/// validated against the policies that the evaluator cannot rule out.
#[derive(Debug, Clone)]
pub struct ArmSets {
    arms: usize,
    inner: Option<(PerArmCi, f64)>,
}

impl ArmSets {
    /// The trivial eliminator that keeps every arm.
    pub fn keep_all(arms: usize) -> Self {
        Self { arms, inner: None }
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    /// Arms kept at context `x`, ascending.
    pub fn set(&self, x: &[f64]) -> Vec<usize> {
        match &self.inner {
            None => (0..self.arms).collect(),
            Some((ci, gamma)) => {
                let stats: Vec<(f64, f64)> =
                    (0..self.arms).map(|a| (ci.mean(x, a), ci.width(x, a))).collect();
                let floor = stats
                    .iter()
                    .map(|(m, w)| m - gamma * w)
                    .fold(f64::NEG_INFINITY, f64::max);
                (0..self.arms)
                    .filter(|&a| stats[a].0 + gamma * stats[a].1 >= floor)
                    .collect()
            }
        }
    }

    pub fn size(&self, x: &[f64]) -> usize {
        self.set(x).len()
    }

    pub fn contains(&self, x: &[f64], arm: usize) -> bool {
        self.set(x).contains(&arm)
    }
}

const GAMMA_CAP: f64 = 1e12;

/// Doubling UCB eliminator: widen the confidence multiplier until every
/// policy within `u_elim` of the evaluator's favorite keeps all of its
/// logged actions; fall back to all arms if no multiplier works.
pub fn arm_eliminator(
    ci: PerArmCi,
    r_elim: &[f64],
    pi_elim: usize,
    u_elim: f64,
    pi_tilde: &[usize],
    policies: &PolicyClass,
    contexts: &[Vec<f64>],
) -> ArmSets {
    let arms = ci.arms();
    let good: Vec<usize> = pi_tilde
        .iter()
        .copied()
        .filter(|&j| r_elim[pi_elim] - r_elim[j] <= u_elim)
        .collect();
    if good.is_empty() || contexts.is_empty() {
        return ArmSets { arms, inner: Some((ci, 1.0)) };
    }
    // CI stats do not depend on gamma; cache them per context
    let stats: Vec<Vec<(f64, f64)>> = contexts
        .iter()
        .map(|x| (0..arms).map(|a| (ci.mean(x, a), ci.width(x, a))).collect())
        .collect();
    let actions: Vec<Vec<usize>> = good
        .iter()
        .map(|&j| contexts.iter().map(|x| policies.policies[j].action(x)).collect())
        .collect();
    let mut gamma = 1.0;
    while gamma <= GAMMA_CAP {
        let valid = actions.iter().all(|acts| {
            acts.iter().zip(&stats).all(|(&a, st)| {
                let floor = st
                    .iter()
                    .map(|(m, w)| m - gamma * w)
                    .fold(f64::NEG_INFINITY, f64::max);
                st[a].0 + gamma * st[a].1 >= floor
            })
        });
        if valid {
            return ArmSets { arms, inner: Some((ci, gamma)) };
        }
        gamma *= 2.0;
    }
    ArmSets::keep_all(arms)
}

/// Conformal arm-set state: eliminator output, reward model, model-greedy
/// policy, and the conformal uncertainty level.
pub struct Cas {
    pub arm_sets: ArmSets,
    pub f_hat: Box<dyn RewardModel>,
    pub pi_con: LinearScorerPolicy,
    pub u_con: f64,
}

impl Cas {
    fn gap(&self, x: &[f64], arm: usize) -> f64 {
        self.f_hat.reward(x, self.pi_con.action(x)) - self.f_hat.reward(x, arm)
    }
}

/// Conformal arm set `C(x, zeta)`: kept arms whose estimated reward gap to
/// the model-greedy arm is at most `u_con / zeta` (boundary included).
pub fn conformal_set(cas: &Cas, x: &[f64], zeta: f64) -> Vec<usize> {
    assert!(zeta > 0.0 && zeta <= 1.0, "zeta must lie in (0,1]");
    let threshold = cas.u_con / zeta;
    cas.arm_sets.set(x).into_iter().filter(|&a| cas.gap(x, a) <= threshold).collect()
}

/// Exact arm probabilities of the exploration kernel
///
/// ```text
/// p(a|x) = (1 - beta_max) Unif_{C(x, beta_max/eta)}(a)
///        + integral_0^beta_max Unif_{C(x, beta/eta)}(a) d beta
/// ```
///
/// `C(x, beta/eta)` is piecewise constant in `beta` with breakpoints
/// `eta u_con / gap_a`, so the integral is a finite sum over sorted
/// breakpoints; no quadrature is involved. A level whose conformal set
/// would be empty falls back to the full kept set, which preserves the
/// pointwise lower bounds.
pub fn exploration_probs(cas: &Cas, eta: f64, beta_max: f64, x: &[f64]) -> Vec<f64> {
    let arms = cas.arm_sets.arms();
    let kept = cas.arm_sets.set(x);
    let mut probs = vec![0.0; arms];
    if kept.is_empty() {
        return probs; // unreachable: the eliminator always keeps the UCB argmax
    }
    // breakpoint of arm a: largest beta at which a is still conformal
    let breaks: Vec<f64> = kept
        .iter()
        .map(|&a| {
            let gap = cas.gap(x, a);
            if gap > 0.0 {
                (eta * cas.u_con / gap).min(beta_max)
            } else {
                beta_max
            }
        })
        .collect();
    let mut ts: Vec<f64> = breaks.clone();
    ts.push(beta_max);
    ts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    ts.dedup();
    let mut lo = 0.0;
    for &t in ts.iter().filter(|&&t| t > 0.0) {
        let members: Vec<usize> = kept
            .iter()
            .zip(&breaks)
            .filter(|(_, &b)| b >= t)
            .map(|(&a, _)| a)
            .collect();
        let members = if members.is_empty() { kept.clone() } else { members };
        let w = (t - lo) / members.len() as f64;
        for a in members {
            probs[a] += w;
        }
        lo = t;
    }
    // top-level term: uniform over the conformal set at beta_max / eta
    let top: Vec<usize> = kept
        .iter()
        .zip(&breaks)
        .filter(|(_, &b)| b >= beta_max)
        .map(|(&a, _)| a)
        .collect();
    let top = if top.is_empty() { kept.clone() } else { top };
    let w = (1.0 - beta_max) / top.len() as f64;
    for a in top {
        probs[a] += w;
    }
    probs
}

/// The exploration kernel as a reusable randomized policy.
pub struct ExplorationPolicy {
    pub cas: Arc<Cas>,
    pub eta: f64,
    pub beta_max: f64,
}

impl StochasticPolicy for ExplorationPolicy {
    fn arm_probs(&self, x: &[f64]) -> Vec<f64> {
        exploration_probs(&self.cas, self.eta, self.beta_max, x)
    }
}

/// Largest kept-set size over a context collection.
pub fn max_set_size<'a>(
    arm_sets: &ArmSets,
    contexts: impl IntoIterator<Item = &'a Vec<f64>>,
) -> usize {
    contexts.into_iter().map(|x| arm_sets.size(x)).max().unwrap_or(0)
}

/// Certificates of the next kernel: the inverse-sampling-probability bound
/// `M = max_x |kept(x)| / (eta u_con)` and the optimal-cover bound
///
/// ```text
/// alpha = avg_{x in B} |C(x)| / (1 - b + b |C(x)|/|kept(x)|)
///       + max_x |kept(x)| / eta
///       + sqrt(max_x |kept(x)| ln(3/delta) / (b |B|))
/// ```
///
/// with `b = beta_max`. `|C(x)|` is the effective conformal-set size the
/// kernel actually uses (it falls back to the kept set when empty).
pub fn cover_and_m_bounds(
    cas: &Cas,
    eta: f64,
    beta_max: f64,
    s_err_b: &[InteractionRecord],
    max_kept: usize,
    delta: ConfidenceLevel,
) -> Result<(f64, f64), BanditError> {
    if s_err_b.is_empty() {
        return Err(BanditError::EmptyLog);
    }
    if !(cas.u_con > 0.0) {
        return Err(BanditError::UConNotPositive(cas.u_con));
    }
    let m = max_kept as f64 / (eta * cas.u_con);
    let mut first = 0.0;
    for rec in s_err_b {
        let kept_len = cas.arm_sets.size(&rec.x);
        let c = conformal_set(cas, &rec.x, (beta_max / eta).min(1.0));
        let c_len = if c.is_empty() { kept_len } else { c.len() } as f64;
        first += c_len / (1.0 - beta_max + beta_max * c_len / kept_len as f64);
    }
    first /= s_err_b.len() as f64;
    let third =
        (max_kept as f64 * (3.0 / delta.delta()).ln() / (beta_max * s_err_b.len() as f64)).sqrt();
    Ok((m, first + max_kept as f64 / eta + third))
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub delta: ConfidenceLevel,
    /// Fraction of the log reserved for the error block.
    pub lambda: f64,
    /// Proportional-response threshold of the kernel.
    pub beta_max: f64,
    pub n_policies: usize,
    /// Fresh contexts added to every support/membership check.
    pub probe_size: usize,
    /// Fresh contexts used to evaluate policies against the known
    /// environment (optimal policy, realized covers).
    pub validation_size: usize,
    pub ridge: f64,
    pub ci_width_floor: f64,
}

impl PipelineConfig {
    pub fn new(delta: ConfidenceLevel) -> Self {
        Self {
            delta,
            lambda: 0.5,
            beta_max: 0.5,
            n_policies: 128,
            probe_size: 512,
            validation_size: 2048,
            ridge: 1.0,
            ci_width_floor: 1e-3,
        }
    }
}

/// Outputs of one epoch-boundary update.
#[derive(Debug, Clone, Copy)]
pub struct EpochReport {
    /// Epoch whose kernel this update produced.
    pub epoch: usize,
    /// Rounds seen when the update ran.
    pub tau: usize,
    pub pi_tilde_size: usize,
    pub u_elim: f64,
    pub u_con: f64,
    pub eta: f64,
    pub m_next: f64,
    pub alpha_next: f64,
    /// Validation-sample cover of the optimal policy under the new kernel
    /// (infinite if the kernel ever refuses the optimal arm).
    pub realized_cover: f64,
    /// Whether the optimal arm stayed in the kept set at every probe context.
    pub pi_star_kept_everywhere: bool,
}

pub struct PipelineRun {
    pub reports: Vec<EpochReport>,
    pub log: Vec<InteractionRecord>,
    /// Class index of the optimal policy (by validation-sample value).
    pub pi_star: usize,
}

/// Run the pipeline end to end on a bounded-reward environment.
pub fn run_pipeline(
    env: &LinearBanditEnv,
    horizon: usize,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<PipelineRun, BanditError> {
    if horizon < 4 {
        return Err(BanditError::HorizonTooShort(horizon));
    }
    let arms = env.arms();
    let dim = env.dim();
    let schedule = epoch_schedule(horizon, 2.0)?;
    let policies = PolicyClass::seeded_grid(cfg.n_policies, dim, arms, seed ^ 0x706f6c69);
    if policies.is_empty() {
        return Err(BanditError::EmptyPolicyClass);
    }

    let mut probe_rng = crate::rng::stream_rng(seed, 1);
    let probe: Vec<Vec<f64>> =
        (0..cfg.probe_size).map(|_| env.sample_context(&mut probe_rng)).collect();
    let mut val_rng = crate::rng::stream_rng(seed, 2);
    let validation: Vec<Vec<f64>> =
        (0..cfg.validation_size).map(|_| env.sample_context(&mut val_rng)).collect();

    // optimal policy by exact environment means on the validation sample
    let pi_star = {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (j, pi) in policies.policies.iter().enumerate() {
            let v: f64 = validation.iter().map(|x| env.mean_reward(x, pi.action(x))).sum();
            if v > best_v {
                best_v = v;
                best = j;
            }
        }
        best
    };
    let pi_star_policy = policies.policies[pi_star].clone();

    let mut kernels: Vec<Arc<dyn StochasticPolicy>> = vec![Arc::new(UniformPolicy { arms })];
    let mut m_bounds = vec![arms as f64];
    let mut alpha_bounds = vec![arms as f64];
    let mut epoch = 0usize;
    let mut log: Vec<InteractionRecord> = Vec::with_capacity(horizon);
    let mut reports = Vec::new();
    let mut round_rng = crate::rng::stream_rng(seed, 3);
    let mut boundary = 0usize;

    for t in 1..=horizon {
        let x = env.sample_context(&mut round_rng);
        let probs = kernels[epoch].arm_probs(&x);
        let arm = sample_categorical(&mut round_rng, &probs);
        let z: f64 = round_rng.sample(rand_distr::StandardNormal);
        let reward = env.reward_with_noise(&x, arm, z);
        log.push(InteractionRecord {
            propensity: probs[arm],
            x,
            arm,
            reward,
            epoch,
            alpha_bound: alpha_bounds[epoch],
            m_bound: m_bounds[epoch],
        });

        if boundary < schedule.len() && t == schedule[boundary] {
            if t < horizon {
                match update_kernel(env, &policies, &log, &kernels, &m_bounds, &probe, cfg)? {
                    Some(update) => {
                        let cas = Arc::new(update.cas);
                        let kernel = ExplorationPolicy {
                            cas: cas.clone(),
                            eta: update.eta,
                            beta_max: cfg.beta_max,
                        };
                        // validation-sample cover of the optimal policy
                        let mut cover_acc = 0.0;
                        for x in &validation {
                            let p = kernel.prob(x, pi_star_policy.action(x));
                            if p > 0.0 {
                                cover_acc += 1.0 / p;
                            } else {
                                cover_acc = f64::INFINITY;
                                break;
                            }
                        }
                        let realized_cover = if cover_acc.is_finite() {
                            cover_acc / validation.len() as f64
                        } else {
                            f64::INFINITY
                        };
                        let pi_star_kept_everywhere = probe
                            .iter()
                            .all(|x| cas.arm_sets.contains(x, pi_star_policy.action(x)));
                        reports.push(EpochReport {
                            epoch: epoch + 1,
                            tau: t,
                            pi_tilde_size: update.pi_tilde_size,
                            u_elim: update.u_elim,
                            u_con: update.u_con,
                            eta: update.eta,
                            m_next: update.m_next,
                            alpha_next: update.alpha_next,
                            realized_cover,
                            pi_star_kept_everywhere,
                        });
                        kernels.push(Arc::new(kernel));
                        m_bounds.push(update.m_next);
                        alpha_bounds.push(update.alpha_next);
                    }
                    None => {
                        // not enough error data yet (or the policy filter came
                        // back empty): explore uniformly one more epoch
                        kernels.push(Arc::new(UniformPolicy { arms }));
                        m_bounds.push(arms as f64);
                        alpha_bounds.push(arms as f64);
                    }
                }
            }
            epoch += 1;
            boundary += 1;
        }
    }
    Ok(PipelineRun { reports, log, pi_star })
}

struct KernelUpdate {
    cas: Cas,
    eta: f64,
    m_next: f64,
    alpha_next: f64,
    u_elim: f64,
    u_con: f64,
    pi_tilde_size: usize,
}

fn update_kernel(
    env: &LinearBanditEnv,
    policies: &PolicyClass,
    log: &[InteractionRecord],
    kernels: &[Arc<dyn StochasticPolicy>],
    m_bounds: &[f64],
    probe: &[Vec<f64>],
    cfg: &PipelineConfig,
) -> Result<Option<KernelUpdate>, BanditError> {
    let split = pipeline_split(log, cfg.lambda)?;
    if split.s_err_elim.is_empty() || split.s_err_con.is_empty() || split.s_err_b.is_empty() {
        return Ok(None);
    }
    let kernel_refs: Vec<&dyn StochasticPolicy> = kernels.iter().map(|k| k.as_ref()).collect();
    let pi_tilde = filter_pi_tilde(policies, log, &kernel_refs, m_bounds, probe);
    if pi_tilde.is_empty() {
        return Ok(None);
    }
    let p_err = kernels[split.err_epoch].as_ref();
    let arms = env.arms();
    let dim = env.dim();
    let third = cfg.delta.scaled(3.0);

    // policy evaluator on the defining block
    let r_elim = ips_value_table(policies, split.s_def)?;
    let pi_elim = *pi_tilde
        .iter()
        .max_by(|&&a, &&b| r_elim[a].partial_cmp(&r_elim[b]).expect("finite values"))
        .expect("nonempty");
    let elim_contexts: Vec<Vec<f64>> = split.s_err_elim.iter().map(|r| r.x.clone()).collect();
    let cover_pi_elim = cover(p_err, &policies.policies[pi_elim], &elim_contexts)?;
    let u_elim = cb_elim_error(
        &ElimInputs {
            policies,
            pi_tilde: &pi_tilde,
            r_elim: &r_elim,
            pi_elim,
            s_err_elim: split.s_err_elim,
            cover_pi_elim,
            alpha_err: split.alpha_err,
        },
        third,
    )?;

    // CI estimator over the full input set, then the doubling eliminator
    let ci = PerArmCi::fit(log, dim, arms, cfg.ridge, cfg.ci_width_floor)?;
    let logged_contexts: Vec<Vec<f64>> = log.iter().map(|r| r.x.clone()).collect();
    let arm_sets =
        arm_eliminator(ci, &r_elim, pi_elim, u_elim, &pi_tilde, policies, &logged_contexts);

    // reward model on the defining block plus the elimination part
    let mut f_fit: Vec<InteractionRecord> = split.s_def.to_vec();
    f_fit.extend_from_slice(split.s_err_elim);
    let f_hat = PerArmRidge::fit(&f_fit, dim, arms, cfg.ridge)?;
    let fit_contexts: Vec<&Vec<f64>> = f_fit.iter().map(|r| &r.x).collect();
    let model_value = |j: usize| -> f64 {
        fit_contexts
            .iter()
            .map(|x| f_hat.reward(x, policies.policies[j].action(x)))
            .sum()
    };
    let pi_con = *pi_tilde
        .iter()
        .max_by(|&&a, &&b| {
            model_value(a).partial_cmp(&model_value(b)).expect("finite values")
        })
        .expect("nonempty");
    let con_contexts: Vec<Vec<f64>> = split.s_err_con.iter().map(|r| r.x.clone()).collect();
    let cover_pi_con = cover(p_err, &policies.policies[pi_con], &con_contexts)?;
    let u_con = cb_con_error(
        &ConInputs {
            policies,
            pi_tilde: &pi_tilde,
            f_hat: &f_hat,
            pi_con,
            s_err_con: split.s_err_con,
            cover_pi_con,
            alpha_err: split.alpha_err,
        },
        third,
    )?;

    let cas = Cas {
        arm_sets,
        f_hat: Box::new(f_hat),
        pi_con: policies.policies[pi_con].clone(),
        u_con,
    };
    let max_kept = max_set_size(&cas.arm_sets, logged_contexts.iter().chain(probe.iter()));

    // risk adjustment: smallest cover bound over the integer grid
    let mut eta = 1.0;
    let mut best = f64::INFINITY;
    let mut m_next = f64::INFINITY;
    let mut alpha_next = f64::INFINITY;
    for e in 1..=arms {
        let e = e as f64;
        let (m, a) = cover_and_m_bounds(&cas, e, cfg.beta_max, split.s_err_b, max_kept, cfg.delta)?;
        if a < best {
            best = a;
            eta = e;
            m_next = m;
            alpha_next = a;
        }
    }
    Ok(Some(KernelUpdate {
        cas,
        eta,
        m_next,
        alpha_next,
        u_elim,
        u_con,
        pi_tilde_size: pi_tilde.len(),
    }))
}

fn sample_categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (a, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    probs.len() - 1
}

#[derive(Debug, Clone)]
pub struct PipelineExperimentConfig {
    pub dim: usize,
    pub arms: usize,
    pub horizon: usize,
    pub trials: usize,
    pub noise_sd: f64,
    pub seed: u64,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, Copy)]
pub struct PipelineRow {
    pub trial: usize,
    pub epoch: usize,
    pub u_elim: f64,
    pub u_con: f64,
    pub m_next: f64,
    pub alpha_next: f64,
    pub realized_cover: f64,
}

/// Independent pipeline trials on fresh bounded-reward environments.
pub fn pipeline_experiment(
    cfg: &PipelineExperimentConfig,
) -> Result<Vec<PipelineRow>, BanditError> {
    let per_trial: Vec<Result<Vec<PipelineRow>, BanditError>> =
        exec::map_indexed(cfg.trials, |trial| {
            let mut env_rng = crate::rng::replicate_rng(cfg.seed, trial as u64, 0);
            let env = LinearBanditEnv::random01(cfg.dim, cfg.arms, cfg.noise_sd, &mut env_rng);
            let run = run_pipeline(
                &env,
                cfg.horizon,
                &cfg.pipeline,
                cfg.seed ^ (trial as u64).wrapping_mul(0x9e3779b97f4a7c15),
            )?;
            Ok(run
                .reports
                .iter()
                .map(|r| PipelineRow {
                    trial,
                    epoch: r.epoch,
                    u_elim: r.u_elim,
                    u_con: r.u_con,
                    m_next: r.m_next,
                    alpha_next: r.alpha_next,
                    realized_cover: r.realized_cover,
                })
                .collect())
        });
    let mut rows = Vec::new();
    for r in per_trial {
        rows.extend(r?);
    }
    Ok(rows)
}

//! Inverse-gap-weighting bandit (FALCON style) with two excess-risk terms:
//! a theoretical parametric-rate bound and a data-driven error-estimated
//! bound computed by localizing over the reward-model class, using data
//! from earlier epochs as the defining split and the last epoch as the
//! error split.

use super::env::{epoch_schedule, InteractionRecord, LinearBanditEnv};
use super::BanditError;
use crate::concentration::ConfidenceLevel;
use crate::eecore::solver::{BoxDomain, SolverConfig};
use crate::eecore::{EeError, SplitData};
use crate::excessrisk::{excess_risk_bound, LabeledSample, ModelClass, RiskBoundConfig};
use crate::exec;
use crate::linalg;
use rand::Rng;
use rand_distr::StandardNormal;

/// Exploration parameter `c * sqrt(K / max(epsilon, floor))`.
pub fn falcon_gamma(arms: usize, epsilon: f64, c: f64, floor: f64) -> f64 {
    c * (arms as f64 / epsilon.max(floor)).sqrt()
}

/// Inverse-gap-weighting kernel: non-greedy arms get
/// `1 / (K + gamma * (f_best - f_a))`, the greedy arm the remainder.
pub fn igw_kernel(f_hat: &[f64], gamma: f64) -> Vec<f64> {
    let k = f_hat.len();
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (a, &v) in f_hat.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = a;
        }
    }
    let mut probs = vec![0.0; k];
    let mut rest = 0.0;
    for a in 0..k {
        if a != best {
            probs[a] = 1.0 / (k as f64 + gamma * (best_v - f_hat[a]));
            rest += probs[a];
        }
    }
    probs[best] = 1.0 - rest;
    probs
}

/// Parametric-rate excess-risk term `C (dK + ln(1/delta)) / n`.
pub fn theoretical_epsilon(
    dim: usize,
    arms: usize,
    n_total: usize,
    delta: ConfidenceLevel,
    big_c: f64,
) -> f64 {
    big_c * ((dim * arms) as f64 + (1.0 / delta.delta()).ln()) / n_total.max(1) as f64
}

#[derive(Debug, Clone)]
pub struct FalconConfig {
    pub delta: ConfidenceLevel,
    /// Multiplier of the theoretical term.
    pub big_c: f64,
    /// Multiplier of the exploration parameter.
    pub c: f64,
    /// Floor inside the gamma formula.
    pub eps_floor: f64,
    /// Ridge weight for the per-arm reward fits.
    pub ridge: f64,
    /// Rewards are clamped to this magnitude before the error-estimation
    /// regression rescales them into a unit range.
    pub reward_cap: f64,
    /// Ascent restarts inside the error-estimation solve.
    pub ee_restarts: usize,
    /// Ascent iterations per restart (restarts x iterations is the solver
    /// budget of one supremum solve).
    pub ee_max_iters: usize,
}

impl FalconConfig {
    pub fn new(delta: ConfidenceLevel) -> Self {
        Self {
            delta,
            big_c: 2.0,
            c: 1.0,
            eps_floor: 1e-6,
            ridge: 1.0,
            reward_cap: 2.5,
            ee_restarts: 2,
            ee_max_iters: 100,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EeEpsilon {
    pub value: f64,
    /// True when the error-estimation path was unavailable or failed and
    /// the theoretical term was substituted.
    pub fell_back: bool,
}

fn encode(x: &[f64], arm: usize, dim: usize, arms: usize) -> Vec<f64> {
    let mut phi = vec![0.0; dim * arms];
    phi[arm * dim..(arm + 1) * dim].copy_from_slice(&x[..dim]);
    phi
}

/// Error-estimated excess-risk term for the reward regression.
///
/// Observed rewards are clamped to `[-cap, cap]` and rescaled into
/// `[-1/2, 1/2]`, making the squared loss range exactly 1; the localized
/// bound over the coefficient box is then floored at zero. Any failure
/// (empty splits, solver trouble) falls back to the theoretical term.
pub fn ee_epsilon(
    s_def: &[InteractionRecord],
    s_err: &[InteractionRecord],
    dim: usize,
    arms: usize,
    cfg: &FalconConfig,
    solver_seed: u64,
) -> EeEpsilon {
    let n_total = s_def.len() + s_err.len();
    let fallback = EeEpsilon {
        value: theoretical_epsilon(dim, arms, n_total, cfg.delta, cfg.big_c),
        fell_back: true,
    };
    if s_def.is_empty() || s_err.is_empty() || cfg.ee_max_iters == 0 {
        return fallback;
    }
    let cap = cfg.reward_cap;
    let to_sample = |r: &InteractionRecord| LabeledSample {
        x: encode(&r.x, r.arm, dim, arms),
        y: r.reward.clamp(-cap, cap) / (2.0 * cap),
    };
    let def: Vec<LabeledSample> = s_def.iter().map(to_sample).collect();
    let err: Vec<LabeledSample> = s_err.iter().map(to_sample).collect();

    let attempt = || -> Result<f64, BanditError> {
        let split = SplitData::from_parts(def.clone(), err.clone()).map_err(EeError::from)?;
        // scaled coefficients of the environment have norm at most 1/2, so a
        // half-unit box contains every candidate of interest with margin
        let domain = BoxDomain::symmetric(dim * arms, 0.5).map_err(EeError::from)?;
        let class = ModelClass::new(domain, 0.5, 0.5);
        let g_def = crate::excessrisk::fit_erm_linear(split.def_part(), 1e-3)
            .map_err(|_| BanditError::EmptyLog)?;
        let mut bound_cfg = RiskBoundConfig::default();
        bound_cfg.localize.max_iters = 10;
        bound_cfg.localize.solver = SolverConfig {
            restarts: cfg.ee_restarts,
            max_iters: cfg.ee_max_iters,
            grid_budget: 1,
            seed: solver_seed,
            warm_starts: vec![g_def.0.clone()],
            ..SolverConfig::default()
        };
        let report = excess_risk_bound(&class.task_class(), &class, &g_def, &split, cfg.delta, &bound_cfg)
            .map_err(|_| BanditError::EmptyLog)?;
        Ok(report.bound_erm.max(0.0))
    };
    match attempt() {
        Ok(value) if value.is_finite() => EeEpsilon { value, fell_back: false },
        _ => fallback,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FalconVariant {
    Theoretical,
    ErrorEstimated,
}

impl FalconVariant {
    pub fn label(self) -> &'static str {
        match self {
            FalconVariant::Theoretical => "theoretical",
            FalconVariant::ErrorEstimated => "error_estimated",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FalconRound {
    pub t: usize,
    /// Excess-risk term in force during this round.
    pub epsilon: f64,
    pub fell_back: bool,
    /// Running sum of `best mean reward - observed reward`.
    pub cum_regret: f64,
}

#[derive(Debug, Clone)]
pub struct FalconTrialOutput {
    pub rounds: Vec<FalconRound>,
    pub log: Vec<InteractionRecord>,
}

fn fit_per_arm(
    log: &[InteractionRecord],
    dim: usize,
    arms: usize,
    ridge: f64,
) -> Result<Vec<Vec<f64>>, BanditError> {
    let mut betas = Vec::with_capacity(arms);
    for a in 0..arms {
        let xs: Vec<Vec<f64>> =
            log.iter().filter(|r| r.arm == a).map(|r| r.x.clone()).collect();
        if xs.is_empty() {
            betas.push(vec![0.0; dim]);
            continue;
        }
        let ys: Vec<f64> = log.iter().filter(|r| r.arm == a).map(|r| r.reward).collect();
        betas.push(linalg::ridge_fit(&xs, &ys, ridge, dim)?);
    }
    Ok(betas)
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

/// One trial over a fixed context/noise stream. Paired comparisons pass the
/// same `contexts` and `noise` slices to both variants; only the action
/// draws use the per-variant seed.
pub fn run_falcon_trial(
    env: &LinearBanditEnv,
    contexts: &[Vec<f64>],
    noise: &[f64],
    variant: FalconVariant,
    cfg: &FalconConfig,
    action_seed: u64,
    solver_seed: u64,
) -> Result<FalconTrialOutput, BanditError> {
    let horizon = contexts.len();
    assert_eq!(noise.len(), horizon);
    let schedule = epoch_schedule(horizon, 2.0)?;
    let dim = env.dim();
    let arms = env.arms();
    let mut rng = crate::rng::stream_rng(action_seed, 0);

    let mut betas: Option<Vec<Vec<f64>>> = None;
    let mut epsilon = theoretical_epsilon(dim, arms, 1, cfg.delta, cfg.big_c);
    let mut fell_back = true; // bootstrap epoch has no data
    let mut gamma = falcon_gamma(arms, epsilon, cfg.c, cfg.eps_floor);
    let mut epoch = 0usize;
    let mut epoch_start = 0usize;
    let mut boundary = 0usize;
    let mut cum_regret = 0.0;
    let mut log: Vec<InteractionRecord> = Vec::with_capacity(horizon);
    let mut rounds = Vec::with_capacity(horizon);

    for t in 1..=horizon {
        let x = &contexts[t - 1];
        let f_hat: Vec<f64> = match &betas {
            Some(bs) => (0..arms)
                .map(|a| bs[a].iter().zip(x).map(|(b, v)| b * v).sum())
                .collect(),
            None => vec![0.0; arms],
        };
        let probs = igw_kernel(&f_hat, gamma);
        let arm = sample_categorical(&mut rng, &probs);
        let reward = env.reward_with_noise(x, arm, noise[t - 1]);
        cum_regret += env.best_mean(x) - reward;
        log.push(InteractionRecord {
            x: x.clone(),
            arm,
            reward,
            propensity: probs[arm],
            epoch,
            alpha_bound: f64::INFINITY,
            m_bound: f64::INFINITY,
        });
        rounds.push(FalconRound { t, epsilon, fell_back, cum_regret });

        if boundary < schedule.len() && t == schedule[boundary] {
            if t < horizon {
                betas = Some(fit_per_arm(&log, dim, arms, cfg.ridge)?);
                match variant {
                    FalconVariant::Theoretical => {
                        epsilon = theoretical_epsilon(dim, arms, t, cfg.delta, cfg.big_c);
                        fell_back = false;
                    }
                    FalconVariant::ErrorEstimated => {
                        let e = ee_epsilon(
                            &log[..epoch_start],
                            &log[epoch_start..],
                            dim,
                            arms,
                            cfg,
                            solver_seed.wrapping_add(boundary as u64),
                        );
                        epsilon = e.value;
                        fell_back = e.fell_back;
                    }
                }
                gamma = falcon_gamma(arms, epsilon, cfg.c, cfg.eps_floor);
            }
            epoch += 1;
            epoch_start = log.len();
            boundary += 1;
        }
    }
    Ok(FalconTrialOutput { rounds, log })
}

#[derive(Debug, Clone)]
pub struct FalconExperimentConfig {
    pub dim: usize,
    pub arms: usize,
    pub horizon: usize,
    pub trials: usize,
    pub noise_sd: f64,
    pub seed: u64,
    pub falcon: FalconConfig,
}

#[derive(Debug, Clone, Copy)]
pub struct FalconRow {
    pub trial: usize,
    pub t: usize,
    pub variant: FalconVariant,
    pub epsilon: f64,
    pub cum_regret: f64,
}

/// Paired-trial comparison: per trial, both variants face the same
/// environment, context stream, and reward noise.
pub fn falcon_experiment(cfg: &FalconExperimentConfig) -> Result<Vec<FalconRow>, BanditError> {
    let per_trial: Vec<Result<Vec<FalconRow>, BanditError>> =
        exec::map_indexed(cfg.trials, |trial| {
            let mut env_rng = crate::rng::replicate_rng(cfg.seed, trial as u64, 0);
            let env = LinearBanditEnv::random(cfg.dim, cfg.arms, cfg.noise_sd, &mut env_rng);
            let mut stream_rng = crate::rng::replicate_rng(cfg.seed, trial as u64, 1);
            let contexts: Vec<Vec<f64>> =
                (0..cfg.horizon).map(|_| env.sample_context(&mut stream_rng)).collect();
            let noise: Vec<f64> =
                (0..cfg.horizon).map(|_| stream_rng.sample(StandardNormal)).collect();

            let mut rows = Vec::with_capacity(2 * cfg.horizon);
            for (variant, purpose) in [
                (FalconVariant::Theoretical, 2u64),
                (FalconVariant::ErrorEstimated, 3u64),
            ] {
                let out = run_falcon_trial(
                    &env,
                    &contexts,
                    &noise,
                    variant,
                    &cfg.falcon,
                    cfg.seed ^ (trial as u64 * crate::rng::STREAMS_PER_REP + purpose),
                    cfg.seed.wrapping_mul(31).wrapping_add(trial as u64),
                )?;
                rows.extend(out.rounds.iter().map(|r| FalconRow {
                    trial,
                    t: r.t,
                    variant,
                    epsilon: r.epsilon,
                    cum_regret: r.cum_regret,
                }));
            }
            Ok(rows)
        });
    let mut rows = Vec::new();
    for r in per_trial {
        rows.extend(r?);
    }
    Ok(rows)
}

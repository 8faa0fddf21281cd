//! Linear stochastic contextual bandit environment and interaction records.

use rand::Rng;
use rand_distr::StandardNormal;

use super::BanditError;

/// Linear reward environment: unit-norm Gaussian contexts, per-arm
/// coefficient vectors with norms in `[0.5, 2.0]`, Gaussian reward noise.
///
/// The optional affine output map (`scale`, `offset`, `clamp01`) rescales
/// rewards into `[0, 1]` for settings that assume bounded rewards; it is
/// order-preserving, so the best arm is unchanged.
#[derive(Debug, Clone)]
pub struct LinearBanditEnv {
    thetas: Vec<Vec<f64>>,
    pub noise_sd: f64,
    scale: f64,
    offset: f64,
    clamp01: bool,
}

impl LinearBanditEnv {
    /// Raw-reward environment; `|mean reward| <= 2`.
    pub fn random<R: Rng>(dim: usize, arms: usize, noise_sd: f64, rng: &mut R) -> Self {
        Self::build(dim, arms, noise_sd, 1.0, 0.0, false, rng)
    }

    /// Bounded-reward environment: means mapped affinely into `[0, 1]` and
    /// observed rewards clamped there.
    pub fn random01<R: Rng>(dim: usize, arms: usize, noise_sd: f64, rng: &mut R) -> Self {
        Self::build(dim, arms, noise_sd, 0.25, 0.5, true, rng)
    }

    fn build<R: Rng>(
        dim: usize,
        arms: usize,
        noise_sd: f64,
        scale: f64,
        offset: f64,
        clamp01: bool,
        rng: &mut R,
    ) -> Self {
        let mut thetas = Vec::with_capacity(arms);
        for _ in 0..arms {
            let mut theta: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
            let target = rng.gen_range(0.5..=2.0);
            for v in &mut theta {
                *v *= target / norm;
            }
            thetas.push(theta);
        }
        Self { thetas, noise_sd, scale, offset, clamp01 }
    }

    pub fn dim(&self) -> usize {
        self.thetas[0].len()
    }

    pub fn arms(&self) -> usize {
        self.thetas.len()
    }

    pub fn sample_context<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut x {
            *v /= norm;
        }
        x
    }

    pub fn mean_reward(&self, x: &[f64], arm: usize) -> f64 {
        let raw: f64 = self.thetas[arm].iter().zip(x).map(|(t, v)| t * v).sum();
        self.scale * raw + self.offset
    }

    /// Best mean reward at `x`.
    pub fn best_mean(&self, x: &[f64]) -> f64 {
        (0..self.arms())
            .map(|a| self.mean_reward(x, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn best_arm(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for a in 0..self.arms() {
            let v = self.mean_reward(x, a);
            if v > best_v {
                best_v = v;
                best = a;
            }
        }
        best
    }

    /// Observed reward: mean plus Gaussian noise (clamped for the bounded
    /// variant). `noise` is the standard-normal draw, so paired runs can
    /// share it.
    pub fn reward_with_noise(&self, x: &[f64], arm: usize, noise: f64) -> f64 {
        let r = self.mean_reward(x, arm) + self.noise_sd * noise;
        if self.clamp01 {
            r.clamp(0.0, 1.0)
        } else {
            r
        }
    }
}

/// One logged bandit round.
///
/// Invariants (maintained by the drivers that build records): `propensity`
/// in (0, 1], `alpha_bound >= 1`, `m_bound >= 1`.
#[derive(Debug, Clone)]
pub struct InteractionRecord {
    pub x: Vec<f64>,
    pub arm: usize,
    pub reward: f64,
    pub propensity: f64,
    pub epoch: usize,
    /// High-probability upper bound on the optimal cover of the kernel that
    /// produced this round.
    pub alpha_bound: f64,
    /// High-probability upper bound on the inverse sampling probability of
    /// the optimal policy under that kernel.
    pub m_bound: f64,
}

/// Geometric epoch boundaries `{ceil(base^k)} ∩ [1, horizon]`, deduplicated
/// and extended to end exactly at the horizon.
pub fn epoch_schedule(horizon: usize, base: f64) -> Result<Vec<usize>, BanditError> {
    if horizon < 2 {
        return Err(BanditError::HorizonTooShort(horizon));
    }
    if !(base > 1.0) {
        return Err(BanditError::BadScheduleBase(base));
    }
    let mut out = Vec::new();
    let mut power = base;
    loop {
        let b = power.ceil() as usize;
        if b > horizon {
            break;
        }
        if out.last() != Some(&b) {
            out.push(b);
        }
        power *= base;
    }
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    Ok(out)
}

//! Single-task high-probability widths.
//!
//! These are the `b(h, delta)` ingredients that the engine in [`crate::eecore`]
//! lifts into uniform bounds: normal quantiles for CLT-style intervals,
//! Hoeffding widths for bounded losses, and Freedman-style widths for
//! inverse-propensity estimates.

use crate::oracles;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConcentrationError {
    #[error("confidence parameter must lie in (0,1), got {0}")]
    BadDelta(f64),
    #[error("probability must lie in (0,1), got {0}")]
    BadProbability(f64),
    #[error("range bound must be nonnegative and finite, got {0}")]
    BadRange(f64),
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("cover terms must be at least 1, got {0}")]
    BadCover(f64),
}

/// A confidence parameter `delta` in the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceLevel(f64);

impl ConfidenceLevel {
    pub fn new(delta: f64) -> Result<Self, ConcentrationError> {
        if delta.is_finite() && delta > 0.0 && delta < 1.0 {
            Ok(Self(delta))
        } else {
            Err(ConcentrationError::BadDelta(delta))
        }
    }

    pub fn delta(self) -> f64 {
        self.0
    }

    /// Budget split: `delta / divisor`, still a valid level for `divisor >= 1`.
    pub fn scaled(self, divisor: f64) -> Self {
        debug_assert!(divisor >= 1.0);
        Self(self.0 / divisor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidthKind {
    NormalQuantile,
    Hoeffding,
    FreedmanIps,
}

/// A nonnegative, finite half-width together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Width {
    pub value: f64,
    pub kind: WidthKind,
}

impl Width {
    fn checked(value: f64, kind: WidthKind) -> Self {
        debug_assert!(value.is_finite() && value >= 0.0);
        Self { value, kind }
    }
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Acklam's rational approximation to the normal quantile
/// (relative error below 1.2e-9 over the whole domain).
fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Standard normal quantile: the `x` with `Phi(x) = p`.
///
/// Rational approximation refined by one Newton step against the
/// series CDF in [`crate::oracles`]; absolute error well below 1e-8 for
/// the probabilities used anywhere in this crate.
pub fn normal_quantile(p: f64) -> Result<f64, ConcentrationError> {
    if !(p > 0.0 && p < 1.0) || !p.is_finite() {
        return Err(ConcentrationError::BadProbability(p));
    }
    let x = acklam(p);
    Ok(x - (oracles::normal_cdf(x) - p) / normal_pdf(x))
}

/// Hoeffding width for an average of n i.i.d. differences of losses in
/// `[0, m]`: `2m * sqrt(ln(1/delta) / (2n))`.
pub fn hoeffding_excess_width(
    m: f64,
    n: usize,
    delta: ConfidenceLevel,
) -> Result<Width, ConcentrationError> {
    if !(m >= 0.0) || !m.is_finite() {
        return Err(ConcentrationError::BadRange(m));
    }
    if n == 0 {
        return Err(ConcentrationError::EmptySample);
    }
    let value = 2.0 * m * ((1.0 / delta.delta()).ln() / (2.0 * n as f64)).sqrt();
    Ok(Width::checked(value, WidthKind::Hoeffding))
}

/// Freedman-style width for inverse-propensity differences:
/// `sqrt(ln(1/delta)/n) * (sqrt(cover_a) + sqrt(cover_b))`.
///
/// Covers of valid kernels are always >= 1, which the preconditions enforce.
pub fn freedman_ips_width(
    delta: ConfidenceLevel,
    n: usize,
    cover_a: f64,
    cover_b: f64,
) -> Result<Width, ConcentrationError> {
    if n == 0 {
        return Err(ConcentrationError::EmptySample);
    }
    for c in [cover_a, cover_b] {
        if !(c >= 1.0) || !c.is_finite() {
            return Err(ConcentrationError::BadCover(c));
        }
    }
    let value = ((1.0 / delta.delta()).ln() / n as f64).sqrt() * (cover_a.sqrt() + cover_b.sqrt());
    Ok(Width::checked(value, WidthKind::FreedmanIps))
}

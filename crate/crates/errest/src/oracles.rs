//! Brute-force reference computations.
//!
//! These are deliberately slow but exact (up to float rounding): full sign
//! enumeration for Rademacher complexity, bisection for the normal
//! quantile, duplicate linear scans for maxima. Tests freeze expected
//! values computed here; the fast implementations elsewhere in the crate
//! are checked against them.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("probability must lie in (0,1), got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("function table must have at least one row and one column")]
    EmptyTable,
    #[error("function table rows must all have the same length")]
    RaggedTable,
    #[error("sign enumeration supports at most {max} columns, got {got}")]
    TooManyColumns { max: usize, got: usize },
    #[error("table entry {value} exceeds the stated bound {bound}")]
    EntryOutOfBound { value: f64, bound: f64 },
    #[error("empty input")]
    EmptyInput,
}

/// erf via the cancellation-free series
/// `erf(x) = 2x·e^{-x²}/√π · Σ_{n≥0} (2x²)^n / (2n+1)!!`.
///
/// Every term is positive, so the sum is accurate to machine precision for
/// the |x| ≤ 6.5 range where erf is not saturated.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x > 6.5 {
        return 1.0; // erfc(6.5) < 1e-19
    }
    let two_x2 = 2.0 * x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut n = 0u32;
    while term > 1e-18 * sum && n < 400 {
        n += 1;
        term *= two_x2 / (2 * n + 1) as f64;
        sum += term;
    }
    2.0 * x * (-x * x).exp() / std::f64::consts::PI.sqrt() * sum
}

/// Standard normal CDF built on the series [`erf`].
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Normal quantile by bisection on [`normal_cdf`] to interval width 1e-12.
///
/// Intended for |result| ≤ 8; beyond that the CDF saturates in f64.
pub fn quantile_oracle(p: f64) -> Result<f64, OracleError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(OracleError::ProbabilityOutOfRange(p));
    }
    let mut lo = -13.0_f64;
    let mut hi = 13.0_f64;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A finite class of bounded functions tabulated on a sample: rows are
/// functions, columns are sample points, entries lie in `[-bound, bound]`.
#[derive(Debug, Clone)]
pub struct FunctionTable {
    values: Vec<Vec<f64>>,
    bound: f64,
}

impl FunctionTable {
    /// Hard cap on columns so that the 2^n sign enumeration stays exact and fast.
    pub const MAX_COLUMNS: usize = 20;

    pub fn new(values: Vec<Vec<f64>>, bound: f64) -> Result<Self, OracleError> {
        if values.is_empty() || values[0].is_empty() {
            return Err(OracleError::EmptyTable);
        }
        let n = values[0].len();
        if values.iter().any(|row| row.len() != n) {
            return Err(OracleError::RaggedTable);
        }
        if n > Self::MAX_COLUMNS {
            return Err(OracleError::TooManyColumns { max: Self::MAX_COLUMNS, got: n });
        }
        for row in &values {
            for &v in row {
                if !(v.abs() <= bound) {
                    return Err(OracleError::EntryOutOfBound { value: v, bound });
                }
            }
        }
        Ok(Self { values, bound })
    }

    pub fn n_functions(&self) -> usize {
        self.values.len()
    }

    pub fn n_points(&self) -> usize {
        self.values[0].len()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }
}

/// Exact empirical Rademacher complexity
/// `R(F) = E_ε sup_f |(1/n) Σ_i ε_i f(x_i)|`
/// by enumerating all 2^n sign vectors.
pub fn exact_rademacher(table: &FunctionTable) -> f64 {
    let n = table.n_points();
    let total = 1u64 << n;
    let mut acc = 0.0_f64;
    for mask in 0..total {
        let mut best = 0.0_f64;
        for row in table.rows() {
            let mut s = 0.0;
            for (i, &v) in row.iter().enumerate() {
                if (mask >> i) & 1 == 1 {
                    s += v;
                } else {
                    s -= v;
                }
            }
            best = best.max(s.abs());
        }
        acc += best;
    }
    acc / total as f64 / n as f64
}

/// Exact maximum with lowest-index tie-break.
pub fn brute_max_error(errors: &[f64]) -> Result<(f64, usize), OracleError> {
    if errors.is_empty() {
        return Err(OracleError::EmptyInput);
    }
    let mut best = errors[0];
    let mut idx = 0;
    for (i, &e) in errors.iter().enumerate().skip(1) {
        if e > best {
            best = e;
            idx = i;
        }
    }
    Ok((best, idx))
}

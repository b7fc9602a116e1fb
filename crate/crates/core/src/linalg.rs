//! Small dense helpers layered over `faer`.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef, Side};

use crate::error::{HinfError, Result};

pub fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].abs());
        }
    }
    best
}

pub fn all_finite(m: MatRef<'_, f64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].is_finite()))
}

/// Largest |m_ij - m_ji|.
pub fn asymmetry(m: MatRef<'_, f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// (M + Mᵀ) / 2.
pub fn symmetrize(m: MatRef<'_, f64>) -> Mat<f64> {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut values = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| HinfError::ConvergenceFailure)?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn sym_lambda_max(m: MatRef<'_, f64>) -> Result<f64> {
    Ok(sym_eigenvalues(m)?.last().copied().unwrap_or(0.0))
}

pub fn sym_lambda_min(m: MatRef<'_, f64>) -> Result<f64> {
    Ok(sym_eigenvalues(m)?.first().copied().unwrap_or(0.0))
}

/// Solves `M X = rhs` for symmetric positive definite `M` by Cholesky.
pub fn spd_solve(m: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if m.nrows() == 0 {
        return Ok(Mat::zeros(0, rhs.ncols()));
    }
    let llt = m
        .llt(Side::Lower)
        .map_err(|_| HinfError::SingularFactorization)?;
    let x = llt.solve(rhs);
    if !all_finite(x.as_ref()) {
        return Err(HinfError::SingularFactorization);
    }
    Ok(x)
}

/// Inverse of a small symmetric positive definite weight matrix.
pub fn spd_inverse(m: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let n = m.nrows();
    let inv = spd_solve(m, Mat::<f64>::identity(n, n).as_ref())?;
    Ok(symmetrize(inv.as_ref()))
}

pub fn eigenvalues(m: MatRef<'_, f64>) -> Result<Vec<c64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.eigenvalues().map_err(|_| HinfError::ConvergenceFailure)
}

/// Largest real part of the spectrum (−∞ for an empty matrix).
pub fn spectral_abscissa(m: MatRef<'_, f64>) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Largest singular value.
pub fn norm2(m: MatRef<'_, f64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let sv = m
        .singular_values()
        .map_err(|_| HinfError::ConvergenceFailure)?;
    Ok(sv.iter().copied().fold(0.0, f64::max))
}

pub fn norm2_complex(m: MatRef<'_, c64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let sv = m
        .singular_values()
        .map_err(|_| HinfError::ConvergenceFailure)?;
    Ok(sv.iter().copied().fold(0.0, f64::max))
}

pub fn vstack(top: MatRef<'_, f64>, bottom: MatRef<'_, f64>) -> Mat<f64> {
    debug_assert_eq!(top.ncols(), bottom.ncols());
    let r = top.nrows();
    Mat::from_fn(r + bottom.nrows(), top.ncols(), |i, j| {
        if i < r {
            top[(i, j)]
        } else {
            bottom[(i - r, j)]
        }
    })
}

pub fn hstack(left: MatRef<'_, f64>, right: MatRef<'_, f64>) -> Mat<f64> {
    debug_assert_eq!(left.nrows(), right.nrows());
    let c = left.ncols();
    Mat::from_fn(left.nrows(), c + right.ncols(), |i, j| {
        if j < c {
            left[(i, j)]
        } else {
            right[(i, j - c)]
        }
    })
}

/// Diagonal similarity scaling by powers of two so that row and column
/// 1-norms are comparable. Returns the scaled matrix `D⁻¹ M D` and the
/// diagonal of `D`; eigenvalues are unchanged and an eigenvector `v` of the
/// scaled matrix maps back to `D v`.
pub fn balance(m: MatRef<'_, f64>) -> (Mat<f64>, Vec<f64>) {
    const RADIX: f64 = 2.0;
    const RADIX_SQ: f64 = RADIX * RADIX;
    let n = m.nrows();
    let mut a = m.to_owned();
    let mut d = vec![1.0; n];
    for _sweep in 0..64 {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX_SQ;
                g /= RADIX;
            }
            g = r * RADIX;
            while c >= g {
                f /= RADIX;
                c /= RADIX_SQ;
                g *= RADIX;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
    (a, d)
}

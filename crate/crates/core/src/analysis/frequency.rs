//! Frequency response and H∞-norm computation.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef};

use crate::error::{HinfError, Result};
use crate::linalg;
use crate::model::StateSpace;

/// Relative distance from the imaginary axis below which a Hamiltonian
/// eigenvalue counts as lying on it: `|Re λ| ≤ IMAG_AXIS_TOL · max(1, |λ|)`.
pub const IMAG_AXIS_TOL: f64 = 1e-8;

/// Non-negative frequencies (rad/s), ascending, always containing 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if points.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(HinfError::OutOfDomain {
                value: points
                    .iter()
                    .copied()
                    .find(|w| !w.is_finite() || *w < 0.0)
                    .unwrap_or(f64::NAN),
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        points.push(0.0);
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(Self { points })
    }

    /// `{0}` together with `count` log-spaced points in `[lo, hi]`.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo) {
            return Err(HinfError::OutOfDomain {
                value: lo,
                lo: f64::MIN_POSITIVE,
                hi,
            });
        }
        let (l0, l1) = (lo.log10(), hi.log10());
        let pts = (0..count)
            .map(|k| {
                if count == 1 {
                    lo
                } else {
                    10f64.powf(l0 + (l1 - l0) * k as f64 / (count - 1) as f64)
                }
            })
            .collect();
        Self::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// `G(jω) = C(jωI − A)⁻¹B + D`.
pub fn freq_response(sys: &StateSpace, omega: f64) -> Result<Mat<c64>> {
    let n = sys.order();
    let m = Mat::<c64>::from_fn(n, n, |i, j| {
        let re = -sys.a[(i, j)];
        if i == j {
            c64::new(re, omega)
        } else {
            c64::new(re, 0.0)
        }
    });
    let b = Mat::<c64>::from_fn(n, sys.inputs(), |i, j| c64::new(sys.b[(i, j)], 0.0));
    let mut g = Mat::<c64>::from_fn(sys.outputs(), sys.inputs(), |i, j| {
        c64::new(sys.d[(i, j)], 0.0)
    });
    if n == 0 {
        return Ok(g);
    }
    let lu = m.partial_piv_lu();
    let u = lu.U();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let p = u[(i, i)].norm();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if !(lo > hi * f64::EPSILON * n as f64) {
        return Err(HinfError::SingularAtFrequency { omega });
    }
    let x = lu.solve(&b);
    for i in 0..sys.outputs() {
        for j in 0..sys.inputs() {
            let mut acc = g[(i, j)];
            for k in 0..n {
                let c = sys.c[(i, k)];
                if c != 0.0 {
                    acc += x[(k, j)] * c;
                }
            }
            g[(i, j)] = acc;
        }
    }
    Ok(g)
}

/// `σ_max(G(jω))`.
pub fn gain_at(sys: &StateSpace, omega: f64) -> Result<f64> {
    linalg::norm2_complex(freq_response(sys, omega)?.as_ref())
}

/// Largest gain over the grid: a lower bound on `‖G‖∞`.
pub fn hinf_norm_sweep(sys: &StateSpace, grid: &FrequencyGrid) -> Result<f64> {
    let mut best = 0.0f64;
    for &w in grid.points() {
        best = best.max(gain_at(sys, w)?);
    }
    Ok(best)
}

/// Grid used to seed the norm bisection: 0 plus log points spanning the
/// magnitudes of the system poles.
pub fn default_grid(sys: &StateSpace) -> Result<FrequencyGrid> {
    let eigs = linalg::eigenvalues(sys.a.as_ref())?;
    let mags: Vec<f64> = eigs.iter().map(|z| z.norm()).filter(|m| *m > 0.0).collect();
    let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mags.iter().copied().fold(0.0, f64::max);
    if mags.is_empty() {
        return FrequencyGrid::log_spaced(1e-3, 1e3, 25);
    }
    FrequencyGrid::log_spaced(lo * 1e-2, hi * 1e1, 25)
}

/// `(max Re λ(A) < 0, max Re λ(A))`.
pub fn is_stable(sys: &StateSpace) -> Result<(bool, f64)> {
    let abscissa = sys.stability_margin()?;
    Ok((abscissa < 0.0, abscissa))
}

pub(crate) fn on_imaginary_axis(z: c64) -> bool {
    z.re.abs() <= IMAG_AXIS_TOL * z.norm().max(1.0)
}

/// The 2n×2n Hamiltonian whose imaginary eigenvalues are the frequencies
/// where `σ(G(jω)) = γ`. `None` when `γ ≤ σ_max(D)`.
fn norm_hamiltonian(sys: &StateSpace, gamma: f64) -> Result<Option<Mat<f64>>> {
    let n = sys.order();
    let (a, b, c, d) = (
        sys.a.as_ref(),
        sys.b.as_ref(),
        sys.c.as_ref(),
        sys.d.as_ref(),
    );
    let m = sys.inputs();
    let dtd = d.transpose() * d;
    let r = Mat::from_fn(m, m, |i, j| {
        let g2 = if i == j { gamma * gamma } else { 0.0 };
        g2 - dtd[(i, j)]
    });
    let r_inv = match linalg::spd_inverse(linalg::symmetrize(r.as_ref()).as_ref()) {
        Ok(x) => x,
        Err(HinfError::SingularFactorization) => return Ok(None),
        Err(e) => return Err(e),
    };
    let f = a + b * &r_inv * d.transpose() * c;
    let top_right = b * &r_inv * b.transpose();
    let p = sys.outputs();
    let inner = Mat::<f64>::identity(p, p) + d * &r_inv * d.transpose();
    let bottom_left = c.transpose() * &inner * c;
    Ok(Some(Mat::from_fn(2 * n, 2 * n, |i, j| {
        match (i < n, j < n) {
            (true, true) => f[(i, j)],
            (true, false) => top_right[(i, j - n)],
            (false, true) => -bottom_left[(i - n, j)],
            (false, false) => -f[(j - n, i - n)],
        }
    })))
}

fn is_zero(m: MatRef<'_, f64>) -> bool {
    linalg::max_abs(m) == 0.0
}

/// Imaginary parts of the Hamiltonian eigenvalues on the imaginary axis at
/// level `gamma`, ascending. `None` when `γ ≤ σ_max(D)`.
fn crossing_frequencies(sys: &StateSpace, gamma: f64) -> Result<Option<Vec<f64>>> {
    let Some(ham) = norm_hamiltonian(sys, gamma)? else {
        return Ok(None);
    };
    let (balanced, _) = linalg::balance(ham.as_ref());
    let mut omegas: Vec<f64> = linalg::eigenvalues(balanced.as_ref())?
        .into_iter()
        .filter(|z| on_imaginary_axis(*z))
        .map(|z| z.im)
        .collect();
    omegas.sort_by(f64::total_cmp);
    Ok(Some(omegas))
}

/// `‖G‖∞` by the level-set iteration on the Hamiltonian imaginary-axis test.
///
/// Starting from the grid lower bound `γ_lb`, the level `(1 + 2·tol)·γ_lb` is
/// tested; if it is crossed, `γ_lb` is raised to the largest gain at the
/// midpoints of the crossing intervals. Convergence is quadratic, and the
/// returned midpoint of `[γ_lb, (1 + 2·tol)·γ_lb]` has relative error at
/// most `tol`.
pub fn hinf_norm(sys: &StateSpace, tol: f64) -> Result<f64> {
    let (stable, abscissa) = is_stable(sys)?;
    if !stable {
        return Err(HinfError::UnstableSystem { abscissa });
    }
    let d_norm = linalg::norm2(sys.d.as_ref())?;
    if (is_zero(sys.b.as_ref()) || is_zero(sys.c.as_ref())) && d_norm == 0.0 {
        return Ok(0.0);
    }
    let mut lo = hinf_norm_sweep(sys, &default_grid(sys)?)?.max(d_norm);
    if lo == 0.0 {
        lo = f64::MIN_POSITIVE.sqrt();
    }
    for _ in 0..200 {
        let level = (1.0 + 2.0 * tol) * lo;
        let omegas = match crossing_frequencies(sys, level)? {
            Some(w) if w.is_empty() => return Ok(0.5 * (lo + level)),
            Some(w) => w,
            None => vec![0.0, 0.0],
        };
        let mut next = level;
        for pair in omegas.windows(2) {
            let mid = 0.5 * (pair[0] + pair[1]);
            next = next.max(gain_at(sys, mid.abs())?);
        }
        lo = next;
    }
    Err(HinfError::ConvergenceFailure)
}

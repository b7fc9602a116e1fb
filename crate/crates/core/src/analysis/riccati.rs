//! Algebraic Riccati equations via the Hamiltonian stable invariant subspace.
//!
//! The equation `AᵀX + XA + XGX + Q = 0` is solved from
//! `Ham = [[A, G], [−Q, −Aᵀ]]`: if `[X₁; X₂]` spans the stable invariant
//! subspace then `X = X₂X₁⁻¹`. The H∞ feasibility test at level γ uses
//! `G = γ⁻²HHᵀ − B(RᵀR)⁻¹Bᵀ` and `Q = I`, matching the regulated output
//! `[z; Ru]`; the LQR equation uses `G = −B(RᵀR)⁻¹Bᵀ`.

use faer::linalg::solvers::{DenseSolveCore, Solve, SolveLstsq};
use faer::{c64, Mat, MatRef};
use serde::Serialize;

use super::frequency::{hinf_norm, on_imaginary_axis};
use crate::error::{HinfError, Result};
use crate::linalg;
use crate::model::PlantSF;
use crate::synthesis::closed_loop_sf;

/// Tolerance used for the H2 upper bound's closed-loop norm.
pub const LQR_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub x: Mat<f64>,
    pub gamma: f64,
    pub stabilizing: bool,
    pub closed_loop_abscissa: f64,
    /// Frobenius norm of the equation residual.
    pub residual: f64,
}

/// Why a level γ (or an ARE instance) was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Infeasibility {
    ImaginaryAxisEigenvalue,
    SubspaceDimension,
    SubspaceConditioning,
    NotPositiveSemidefinite,
    NotStabilizing,
    Residual,
}

#[derive(Debug, Clone)]
pub enum CareOutcome {
    Feasible(RiccatiSolution),
    Infeasible(Infeasibility),
}

impl CareOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, CareOutcome::Feasible(_))
    }
}

struct AreSolution {
    x: Mat<f64>,
    abscissa: f64,
    residual: f64,
}

/// Stabilizing PSD solution of `AᵀX + XA + XGX + Q = 0`, if any.
fn stabilizing_solution(
    a: MatRef<'_, f64>,
    g: MatRef<'_, f64>,
    q: MatRef<'_, f64>,
) -> Result<std::result::Result<AreSolution, Infeasibility>> {
    let n = a.nrows();
    let ham = Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => a[(i, j)],
        (true, false) => g[(i, j - n)],
        (false, true) => -q[(i - n, j)],
        (false, false) => -a[(j - n, i - n)],
    });
    let (balanced, scaling) = linalg::balance(ham.as_ref());
    let evd = balanced
        .eigen()
        .map_err(|_| HinfError::ConvergenceFailure)?;
    let values = evd.S().column_vector();
    if values.iter().any(|z| on_imaginary_axis(*z)) {
        return Ok(Err(Infeasibility::ImaginaryAxisEigenvalue));
    }
    let stable: Vec<usize> = (0..2 * n).filter(|&k| values[k].re < 0.0).collect();
    if stable.len() != n {
        return Ok(Err(Infeasibility::SubspaceDimension));
    }

    // Eigenvectors are cheap but degenerate near eigenvalue collisions; the
    // sign iteration is the fallback.
    let accepted = |x: Mat<f64>| {
        let residual = are_residual(a, g, q, x.as_ref());
        let x_norm = x.norm_l2();
        (residual <= 1e-6 * x_norm * x_norm).then_some((x, residual))
    };
    let from_vectors = eigenvector_solution(evd.U(), &stable, &scaling).and_then(accepted);
    let (x, residual) = match from_vectors {
        Some(found) => found,
        None => match sign_solution(&ham) {
            Some(x) => match accepted(x) {
                Some(found) => found,
                None => return Ok(Err(Infeasibility::Residual)),
            },
            None => return Ok(Err(Infeasibility::SubspaceConditioning)),
        },
    };

    let eigs = linalg::sym_eigenvalues(x.as_ref())?;
    let spectral = eigs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if eigs.first().copied().unwrap_or(0.0) < -1e-9 * spectral {
        return Ok(Err(Infeasibility::NotPositiveSemidefinite));
    }
    let a_cl = a + g * &x;
    let abscissa = linalg::spectral_abscissa(a_cl.as_ref())?;
    if !(abscissa < 0.0) {
        return Ok(Err(Infeasibility::NotStabilizing));
    }
    Ok(Ok(AreSolution {
        x,
        abscissa,
        residual,
    }))
}

fn are_residual(
    a: MatRef<'_, f64>,
    g: MatRef<'_, f64>,
    q: MatRef<'_, f64>,
    x: MatRef<'_, f64>,
) -> f64 {
    let n = a.nrows();
    let ax = a.transpose() * x;
    let xgx = x * g * x;
    Mat::from_fn(n, n, |i, j| {
        ax[(i, j)] + ax[(j, i)] + xgx[(i, j)] + q[(i, j)]
    })
    .norm_l2()
}

/// `X = X₂X₁⁻¹` from the stable eigenvectors of the balanced Hamiltonian.
fn eigenvector_solution(
    vectors: MatRef<'_, c64>,
    stable: &[usize],
    scaling: &[f64],
) -> Option<Mat<f64>> {
    let n = stable.len();
    let mut basis = Mat::<c64>::from_fn(2 * n, n, |i, k| vectors[(i, stable[k])] * scaling[i]);
    for k in 0..n {
        let norm = (0..2 * n)
            .map(|i| basis[(i, k)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            for i in 0..2 * n {
                basis[(i, k)] /= norm;
            }
        }
    }
    // X X₁ = X₂  ⇔  X₁ᵀ Xᵀ = X₂ᵀ
    let x1t = Mat::<c64>::from_fn(n, n, |i, j| basis[(j, i)]);
    let x2t = Mat::<c64>::from_fn(n, n, |i, j| basis[(n + j, i)]);
    let lu = x1t.partial_piv_lu();
    let u = lu.U();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let p = u[(i, i)].norm();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if !(lo > 1e-13 * hi) {
        return None;
    }
    let xt = lu.solve(&x2t);
    let (mut re_max, mut im_max) = (0.0f64, 0.0f64);
    for j in 0..n {
        for i in 0..n {
            re_max = re_max.max(xt[(i, j)].re.abs());
            im_max = im_max.max(xt[(i, j)].im.abs());
        }
    }
    if !re_max.is_finite() || im_max > 1e-6 * re_max.max(f64::MIN_POSITIVE) {
        return None;
    }
    Some(linalg::symmetrize(
        Mat::from_fn(n, n, |i, j| xt[(j, i)].re).as_ref(),
    ))
}

/// Newton iteration for `sign(Ham)` with determinant scaling, then `X` from
/// `(sign(Ham) + I)[I; X] = 0` in the least-squares sense.
fn sign_solution(ham: &Mat<f64>) -> Option<Mat<f64>> {
    const MAX_ITER: usize = 100;
    let m = ham.nrows();
    let n = m / 2;
    let mut z = ham.clone();
    let mut scale = true;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let lu = z.partial_piv_lu();
        let u = lu.U();
        let mut log_det = 0.0;
        for i in 0..m {
            let p = u[(i, i)].abs();
            if !(p > 0.0) || !p.is_finite() {
                return None;
            }
            log_det += p.ln();
        }
        let c = if scale {
            (-log_det / m as f64).exp()
        } else {
            1.0
        };
        let inv = lu.inverse();
        let next = Mat::from_fn(m, m, |i, j| 0.5 * (c * z[(i, j)] + inv[(i, j)] / c));
        let step = (&next - &z).norm_l2();
        let size = next.norm_l2();
        z = next;
        if converged {
            break;
        }
        if step <= 1e-2 * size {
            scale = false;
        }
        if step <= 1e-12 * size {
            converged = true;
        }
    }
    if !converged || !linalg::all_finite(z.as_ref()) {
        return None;
    }
    let lhs = Mat::from_fn(m, n, |i, j| {
        if i < n {
            z[(i, n + j)]
        } else {
            z[(i, n + j)] + if i - n == j { 1.0 } else { 0.0 }
        }
    });
    let rhs = Mat::from_fn(m, n, |i, j| {
        if i < n {
            -(z[(i, j)] + if i == j { 1.0 } else { 0.0 })
        } else {
            -z[(i, j)]
        }
    });
    let x = lhs.qr().solve_lstsq(&rhs);
    linalg::all_finite(x.as_ref()).then(|| linalg::symmetrize(x.as_ref()))
}

/// H∞ state-feedback feasibility at level `gamma`:
/// `AᵀX + XA + X(γ⁻²HHᵀ − B(RᵀR)⁻¹Bᵀ)X + I = 0` with a stabilizing `X ⪰ 0`.
pub fn care_feasible(plant: &PlantSF, gamma: f64) -> Result<CareOutcome> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(HinfError::OutOfDomain {
            value: gamma,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let n = plant.dim();
    let w = plant.input_weight_inverse()?;
    let hht = &plant.h * plant.h.transpose();
    let bwb = &plant.b * &w * plant.b.transpose();
    let inv_g2 = 1.0 / (gamma * gamma);
    let g =
        linalg::symmetrize(Mat::from_fn(n, n, |i, j| inv_g2 * hht[(i, j)] - bwb[(i, j)]).as_ref());
    let q = Mat::<f64>::identity(n, n);
    Ok(
        match stabilizing_solution(plant.a.entries(), g.as_ref(), q.as_ref())? {
            Ok(sol) => CareOutcome::Feasible(RiccatiSolution {
                x: sol.x,
                gamma,
                stabilizing: true,
                closed_loop_abscissa: sol.abscissa,
                residual: sol.residual,
            }),
            Err(why) => CareOutcome::Infeasible(why),
        },
    )
}

/// `K = −(RᵀR)⁻¹BᵀX`, the state feedback associated with a Riccati solution.
pub fn riccati_gain(plant: &PlantSF, x: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let w = plant.input_weight_inverse()?;
    let k = &w * plant.b.transpose() * x;
    Ok(Mat::from_fn(k.nrows(), k.ncols(), |i, j| -k[(i, j)]))
}

/// LQR gain for `∫ zᵀQz + uᵀRu`: returns `(K, X)` with `K = −R⁻¹BᵀX`.
pub fn lqr_weighted(
    plant: &PlantSF,
    state_weight: MatRef<'_, f64>,
    input_weight: MatRef<'_, f64>,
) -> Result<(Mat<f64>, Mat<f64>)> {
    let n = plant.dim();
    let p = plant.inputs();
    if state_weight.nrows() != n || state_weight.ncols() != n {
        return Err(HinfError::DimensionMismatch(
            "state weight must be n x n".into(),
        ));
    }
    if input_weight.nrows() != p || input_weight.ncols() != p {
        return Err(HinfError::DimensionMismatch(
            "input weight must be p x p".into(),
        ));
    }
    let r_inv = linalg::spd_inverse(linalg::symmetrize(input_weight).as_ref())?;
    let brb = &plant.b * &r_inv * plant.b.transpose();
    let g = linalg::symmetrize(Mat::from_fn(n, n, |i, j| -brb[(i, j)]).as_ref());
    let q = linalg::symmetrize(state_weight);
    match stabilizing_solution(plant.a.entries(), g.as_ref(), q.as_ref())? {
        Ok(sol) => {
            let k = &r_inv * plant.b.transpose() * &sol.x;
            Ok((Mat::from_fn(p, n, |i, j| -k[(i, j)]), sol.x))
        }
        Err(why) => Err(HinfError::SubspaceConditioning(format!(
            "LQR Riccati equation rejected: {why:?}"
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct LqrOutcome {
    pub gain: Mat<f64>,
    pub x: Mat<f64>,
    /// Closed-loop H∞ norm under the LQR gain: an upper bound on γ_opt.
    pub gamma_ub: f64,
}

/// The H2 (LQR) design with state weight `I` and input weight `RᵀR`, and the
/// H∞ norm it achieves.
pub fn lqr_gain(plant: &PlantSF) -> Result<LqrOutcome> {
    let n = plant.dim();
    let rtr = plant.r.transpose() * &plant.r;
    let (gain, x) = lqr_weighted(plant, Mat::<f64>::identity(n, n).as_ref(), rtr.as_ref())?;
    let cl = closed_loop_sf(plant, gain.as_ref())?;
    let gamma_ub = hinf_norm(&cl, LQR_NORM_TOL)?;
    Ok(LqrOutcome { gain, x, gamma_ub })
}

use faer::{Mat, MatRef};

use crate::error::{HinfError, Result};
use crate::linalg;
use crate::model::{neg_solve, PlantSF};

/// `λ_max((A+BK)ᵀP + P(A+BK) + I)` with `P = −A⁻¹`. A non-positive value
/// certifies that `A + BK` is exponentially stable with Lyapunov matrix `P`.
pub fn lyapunov_certificate(plant: &PlantSF, k: MatRef<'_, f64>) -> Result<f64> {
    let n = plant.dim();
    if k.nrows() != plant.inputs() || k.ncols() != n {
        return Err(HinfError::DimensionMismatch(format!(
            "gain is {}x{}, expected {}x{n}",
            k.nrows(),
            k.ncols(),
            plant.inputs()
        )));
    }
    let a_inv = neg_solve(&plant.a, Mat::<f64>::identity(n, n).as_ref())?;
    let p = linalg::symmetrize(Mat::from_fn(n, n, |i, j| -a_inv[(i, j)]).as_ref());
    let a_cl = plant.a.entries() + &plant.b * k;
    let pa = &p * &a_cl;
    let lyap = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        pa[(j, i)] + pa[(i, j)] + id
    });
    linalg::sym_lambda_max(linalg::symmetrize(lyap.as_ref()).as_ref())
}

/// `‖P‖ = ‖A⁻¹‖ = 1/m`, the scale the certificate is judged against.
pub fn lyapunov_scale(plant: &PlantSF) -> f64 {
    1.0 / plant.a.coercivity()
}

//! Closed-form optimal state feedback and estimation.
//!
//! For a symmetric, strictly negative generator `A` the H∞-optimal state
//! feedback is `K = (RᵀR)⁻¹BᵀA⁻¹`, and the optimal attenuation is
//! `‖Hᵀ(A² + B(RᵀR)⁻¹Bᵀ)⁻¹H‖^½`. The estimator results follow by duality:
//! `L = A⁻¹Cᵀ(SSᵀ)⁻¹` with minimal error `‖Q(A² + Cᵀ(SSᵀ)⁻¹C)⁻¹Qᵀ‖^½`.
//! None of these require iteration; the only factorizations are Cholesky
//! factorizations of `−A` and of `M = A² + B(RᵀR)⁻¹Bᵀ`.

use faer::{Mat, MatRef};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HinfError, Result};
use crate::linalg;
use crate::model::{neg_solve, PlantEst, PlantSF, StateSpace, SymmetricGenerator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GainRole {
    StateFeedback,
    Estimator,
}

#[derive(Debug, Clone)]
pub struct SynthesisOutcome {
    /// `K` (inputs × order) or `L` (order × measurements).
    pub gain: Mat<f64>,
    /// Optimal attenuation, or minimal estimation error.
    pub gamma: f64,
    pub role: GainRole,
}

/// `K = (RᵀR)⁻¹BᵀA⁻¹`.
pub fn state_feedback_gain(plant: &PlantSF) -> Result<Mat<f64>> {
    let w = plant.input_weight_inverse()?;
    // A is symmetric, so BᵀA⁻¹ = (A⁻¹B)ᵀ.
    let y = neg_solve(&plant.a, plant.b.as_ref())?;
    Ok(&w * y.transpose())
}

/// `γ_opt = ‖Hᵀ(A² + B(RᵀR)⁻¹Bᵀ)⁻¹H‖^½`.
pub fn optimal_attenuation(plant: &PlantSF) -> Result<f64> {
    let w = plant.input_weight_inverse()?;
    attenuation(&plant.a, plant.b.as_ref(), w.as_ref(), plant.h.as_ref())
}

pub fn synthesize_state_feedback(plant: &PlantSF) -> Result<SynthesisOutcome> {
    Ok(SynthesisOutcome {
        gain: state_feedback_gain(plant)?,
        gamma: optimal_attenuation(plant)?,
        role: GainRole::StateFeedback,
    })
}

/// `‖Dᵀ(A² + G W Gᵀ)⁻¹D‖^½`; the spectral norm is read off the small
/// disturbance-sized matrix, never from an order-sized decomposition.
fn attenuation(
    a: &SymmetricGenerator,
    input_map: MatRef<'_, f64>,
    weight_inv: MatRef<'_, f64>,
    disturbance_map: MatRef<'_, f64>,
) -> Result<f64> {
    let z = match a.negated_sparse() {
        // (−A)² = A², so the sparse copy of −A serves directly.
        Some(neg) => neg
            .square_plus_low_rank(input_map, weight_inv)
            .spd_solve(disturbance_map)?,
        None => {
            let a_mat = a.entries();
            let mut m = a_mat * a_mat;
            if input_map.ncols() > 0 {
                m += input_map * weight_inv * input_map.transpose();
            }
            let m = linalg::symmetrize(m.as_ref());
            linalg::spd_solve(m.as_ref(), disturbance_map)?
        }
    };
    let small = disturbance_map.transpose() * &z;
    let small = linalg::symmetrize(small.as_ref());
    let lambda = linalg::sym_lambda_max(small.as_ref())?;
    Ok(lambda.max(0.0).sqrt())
}

/// Closed loop `(A + BK, H, [I; RK], 0)` from `d` to `ζ = [z; Ru]`.
pub fn closed_loop_sf(plant: &PlantSF, k: MatRef<'_, f64>) -> Result<StateSpace> {
    let n = plant.dim();
    if k.nrows() != plant.inputs() || k.ncols() != n {
        return Err(HinfError::DimensionMismatch(format!(
            "gain is {}x{}, expected {}x{n}",
            k.nrows(),
            k.ncols(),
            plant.inputs()
        )));
    }
    let a_cl = plant.a.entries() + &plant.b * k;
    let rk = &plant.r * k;
    let c_cl = linalg::vstack(Mat::<f64>::identity(n, n).as_ref(), rk.as_ref());
    StateSpace::strictly_proper(a_cl, plant.h.clone(), c_cl)
}

/// `L = A⁻¹Cᵀ(SSᵀ)⁻¹`.
pub fn estimator_gain(plant: &PlantEst) -> Result<Mat<f64>> {
    let w = plant.noise_weight_inverse()?;
    let y = neg_solve(&plant.a, plant.c.transpose())?;
    Ok(&y * &w)
}

/// `‖Q(A² + Cᵀ(SSᵀ)⁻¹C)⁻¹Qᵀ‖^½`.
pub fn min_estimation_error(plant: &PlantEst) -> Result<f64> {
    let w = plant.noise_weight_inverse()?;
    attenuation(
        &plant.a,
        plant.c.transpose(),
        w.as_ref(),
        plant.q.transpose(),
    )
}

pub fn synthesize_estimator(plant: &PlantEst) -> Result<SynthesisOutcome> {
    Ok(SynthesisOutcome {
        gain: estimator_gain(plant)?,
        gamma: min_estimation_error(plant)?,
        role: GainRole::Estimator,
    })
}

/// Error system `(A + LC, [I  LS], Q, 0)` from `d = [w; v]` to `ζ = Qe`.
pub fn closed_loop_est(plant: &PlantEst, l: MatRef<'_, f64>) -> Result<StateSpace> {
    let n = plant.dim();
    if l.nrows() != n || l.ncols() != plant.measurements() {
        return Err(HinfError::DimensionMismatch(format!(
            "gain is {}x{}, expected {n}x{}",
            l.nrows(),
            l.ncols(),
            plant.measurements()
        )));
    }
    let a_cl = plant.a.entries() + l * &plant.c;
    let ls = l * &plant.s;
    let b_cl = linalg::hstack(Mat::<f64>::identity(n, n).as_ref(), ls.as_ref());
    StateSpace::strictly_proper(a_cl, b_cl, plant.q.clone())
}

/// One actuator (`B`) or sensor (`C`) layout to evaluate.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub label: String,
    pub matrix: Mat<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlacementEntry {
    pub id: usize,
    pub label: String,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlacementResult {
    pub candidates: Vec<PlacementEntry>,
    /// Index of the smallest γ; ties go to the lowest index.
    pub best: usize,
}

impl PlacementResult {
    /// Candidate indices ordered by γ, ties by index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.candidates.len()).collect();
        order.sort_by(|&i, &j| {
            self.candidates[i]
                .gamma
                .total_cmp(&self.candidates[j].gamma)
                .then(i.cmp(&j))
        });
        order
    }
}

fn run_sweep<F>(
    candidates: &[Candidate],
    threads: Option<usize>,
    eval: F,
) -> Result<PlacementResult>
where
    F: Fn(&Candidate) -> Result<f64> + Sync,
{
    if candidates.is_empty() {
        return Err(HinfError::EmptyCandidateList);
    }
    let evaluate = || -> Vec<Result<f64>> { candidates.par_iter().map(&eval).collect() };
    let gammas = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map(|pool| pool.install(evaluate))
            .unwrap_or_else(|_| candidates.iter().map(&eval).collect()),
        None => evaluate(),
    };
    let mut entries = Vec::with_capacity(candidates.len());
    for (id, (cand, gamma)) in candidates.iter().zip(gammas).enumerate() {
        entries.push(PlacementEntry {
            id,
            label: cand.label.clone(),
            gamma: gamma?,
        });
    }
    let mut best = 0;
    for (i, e) in entries.iter().enumerate() {
        if e.gamma < entries[best].gamma {
            best = i;
        }
    }
    Ok(PlacementResult {
        candidates: entries,
        best,
    })
}

/// Ranks actuator layouts `B` by the closed-form optimal attenuation of
/// `(A, B, H, R)`. Candidates are independent and evaluated in parallel on
/// at most `threads` workers.
pub fn placement_sweep(
    a: &SymmetricGenerator,
    h: MatRef<'_, f64>,
    r: MatRef<'_, f64>,
    candidates: &[Candidate],
    threads: Option<usize>,
) -> Result<PlacementResult> {
    run_sweep(candidates, threads, |cand| {
        let plant = PlantSF::new(a.clone(), cand.matrix.clone(), h.to_owned(), r.to_owned())?;
        optimal_attenuation(&plant)
    })
}

/// Ranks sensor layouts `C` by the minimal estimation error of `(A, C, Q, S)`.
pub fn sensor_placement_sweep(
    a: &SymmetricGenerator,
    q: MatRef<'_, f64>,
    s: MatRef<'_, f64>,
    candidates: &[Candidate],
    threads: Option<usize>,
) -> Result<PlacementResult> {
    run_sweep(candidates, threads, |cand| {
        let plant = PlantEst::new(a.clone(), cand.matrix.clone(), q.to_owned(), s.to_owned())?;
        min_estimation_error(&plant)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_generator, SYMMETRY_TOL};

    fn scalar(v: f64) -> Mat<f64> {
        Mat::from_fn(1, 1, |_, _| v)
    }

    fn trivial_plant() -> PlantSF {
        let a = validate_generator(scalar(-1.0).as_ref(), SYMMETRY_TOL).unwrap();
        PlantSF::new(a, scalar(1.0), scalar(1.0), scalar(1.0)).unwrap()
    }

    fn trivial_est() -> PlantEst {
        let a = validate_generator(scalar(-1.0).as_ref(), SYMMETRY_TOL).unwrap();
        PlantEst::new(a, scalar(1.0), scalar(1.0), scalar(1.0)).unwrap()
    }

    #[test]
    fn scalar_feedback() {
        let p = trivial_plant();
        let k = state_feedback_gain(&p).unwrap();
        assert_eq!(k[(0, 0)], -1.0);
        let g = optimal_attenuation(&p).unwrap();
        assert!((g - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn uncontrolled_static_gain() {
        for a in [0.5, 2.0, 7.0] {
            let gen = validate_generator(scalar(-a).as_ref(), SYMMETRY_TOL).unwrap();
            let p = PlantSF::new(gen, scalar(0.0), scalar(1.0), scalar(1.0)).unwrap();
            assert!((optimal_attenuation(&p).unwrap() - 1.0 / a).abs() < 1e-14);
            assert_eq!(state_feedback_gain(&p).unwrap()[(0, 0)], 0.0);
        }
    }

    #[test]
    fn zero_actuation_any_shape() {
        let a = validate_generator(
            Mat::from_fn(3, 3, |i, j| if i == j { -2.0 } else { 0.5 }).as_ref(),
            SYMMETRY_TOL,
        )
        .unwrap();
        let p = PlantSF::new(
            a,
            Mat::zeros(3, 2),
            Mat::<f64>::identity(3, 3),
            Mat::<f64>::identity(2, 2),
        )
        .unwrap();
        let k = state_feedback_gain(&p).unwrap();
        assert_eq!((k.nrows(), k.ncols()), (2, 3));
        assert_eq!(k.norm_max(), 0.0);
    }

    #[test]
    fn scalar_closed_loops() {
        let p = trivial_plant();
        let cl = closed_loop_sf(&p, scalar(-1.0).as_ref()).unwrap();
        assert_eq!(cl.a[(0, 0)], -2.0);
        assert_eq!(cl.b[(0, 0)], 1.0);
        assert_eq!((cl.c[(0, 0)], cl.c[(1, 0)]), (1.0, -1.0));
        assert_eq!(cl.d.norm_max(), 0.0);

        let open = closed_loop_sf(&p, scalar(0.0).as_ref()).unwrap();
        assert_eq!(open.a[(0, 0)], -1.0);
        assert_eq!(open.c[(1, 0)], 0.0);
        assert!(closed_loop_sf(&p, Mat::zeros(1, 2).as_ref()).is_err());

        let e = trivial_est();
        let cl = closed_loop_est(&e, scalar(-1.0).as_ref()).unwrap();
        assert_eq!(cl.a[(0, 0)], -2.0);
        assert_eq!((cl.b[(0, 0)], cl.b[(0, 1)]), (1.0, -1.0));
        assert_eq!(cl.c[(0, 0)], 1.0);
        let open = closed_loop_est(&e, scalar(0.0).as_ref()).unwrap();
        assert_eq!((open.a[(0, 0)], open.b[(0, 1)]), (-1.0, 0.0));
        assert!(closed_loop_est(&e, Mat::zeros(2, 1).as_ref()).is_err());
    }

    #[test]
    fn scalar_estimator() {
        let e = trivial_est();
        assert_eq!(estimator_gain(&e).unwrap()[(0, 0)], -1.0);
        let err = min_estimation_error(&e).unwrap();
        assert!((err - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);

        let a = validate_generator(scalar(-1.0).as_ref(), SYMMETRY_TOL).unwrap();
        let blind = PlantEst::new(a.clone(), scalar(0.0), scalar(1.0), scalar(1.0)).unwrap();
        assert_eq!(estimator_gain(&blind).unwrap()[(0, 0)], 0.0);
        let ignore = PlantEst::new(a, scalar(1.0), scalar(0.0), scalar(1.0)).unwrap();
        assert_eq!(min_estimation_error(&ignore).unwrap(), 0.0);
    }

    #[test]
    fn placement_ties_and_errors() {
        let p = trivial_plant();
        let single = [Candidate {
            label: "only".into(),
            matrix: scalar(1.0),
        }];
        let res = placement_sweep(&p.a, p.h.as_ref(), p.r.as_ref(), &single, None).unwrap();
        assert_eq!(res.best, 0);

        let dupes: Vec<Candidate> = (0..4)
            .map(|i| Candidate {
                label: format!("c{i}"),
                matrix: scalar(if i == 0 { 0.5 } else { 2.0 }),
            })
            .collect();
        let res = placement_sweep(&p.a, p.h.as_ref(), p.r.as_ref(), &dupes, Some(2)).unwrap();
        assert_eq!(res.best, 1);
        assert_eq!(res.candidates[1].gamma, res.candidates[3].gamma);
        assert_eq!(res.ranking(), vec![1, 2, 3, 0]);

        let empty: [Candidate; 0] = [];
        assert_eq!(
            placement_sweep(&p.a, p.h.as_ref(), p.r.as_ref(), &empty, None).unwrap_err(),
            HinfError::EmptyCandidateList
        );
    }
}

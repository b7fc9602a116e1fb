mod common;

use faer::Mat;
use hinf_core::analysis::{
    freq_response, gain_at, hinf_norm, is_stable, lqr_weighted, FrequencyGrid,
};
use hinf_core::linalg;
use hinf_core::pde::{heat1d_discretize, Conductivity, Rod1DSpec, RodDisturbance};
use hinf_core::{
    closed_loop_est, closed_loop_sf, estimator_gain, min_estimation_error, optimal_attenuation,
    placement_sweep, state_feedback_gain, Candidate, PlantSF,
};
use proptest::prelude::*;
use rand::Rng;

use common::{
    max_abs, max_abs_diff, random_estimation_plant, random_plant, random_plant_of_order, rng,
    uniform,
};

#[test]
fn formula_matches_closed_loop_norm_20() {
    let mut r = rng(2020);
    for _ in 0..3 {
        let plant = random_plant_of_order(&mut r, 20);
        let k = state_feedback_gain(&plant).unwrap();
        let gamma = optimal_attenuation(&plant).unwrap();
        let norm = hinf_norm(&closed_loop_sf(&plant, k.as_ref()).unwrap(), 1e-10).unwrap();
        assert!((gamma - norm).abs() <= 1e-6 * gamma, "{gamma} vs {norm}");
    }
}

#[test]
fn closed_loop_peaks_at_zero_frequency() {
    let mut r = rng(7);
    let grid = FrequencyGrid::log_spaced(1e-3, 1e3, 200).unwrap();
    for _ in 0..10 {
        let plant = random_plant(&mut r, 15);
        let k = state_feedback_gain(&plant).unwrap();
        let sys = closed_loop_sf(&plant, k.as_ref()).unwrap();
        let g0 = gain_at(&sys, 0.0).unwrap();
        // σ_max(G(0)) is γ_opt itself: G(0) = −[I; RK]·(A+BK)⁻¹H.
        let gamma = optimal_attenuation(&plant).unwrap();
        assert!((g0 - gamma).abs() <= 1e-9 * gamma.max(1.0));
        for &w in grid.points() {
            assert!(gain_at(&sys, w).unwrap() <= g0 + 1e-9);
        }
    }
}

#[test]
fn perturbed_lqr_gains_do_no_better() {
    let mut r = rng(99);
    for _ in 0..6 {
        let plant = random_plant(&mut r, 12);
        let gamma = optimal_attenuation(&plant).unwrap();
        let (n, m) = (plant.dim(), plant.inputs());
        for _ in 0..5 {
            let gq = uniform(&mut r, n, n);
            let qx = &gq * gq.transpose() + Mat::<f64>::identity(n, n) * 0.1;
            let gr = uniform(&mut r, m, m);
            let ru = &gr * gr.transpose() + Mat::<f64>::identity(m, m) * r.gen_range(0.05..2.0);
            let (k, _) = lqr_weighted(&plant, qx.as_ref(), ru.as_ref()).unwrap();
            let sys = closed_loop_sf(&plant, k.as_ref()).unwrap();
            assert!(is_stable(&sys).unwrap().0);
            let norm = hinf_norm(&sys, 1e-10).unwrap();
            assert!(norm >= gamma - 1e-8, "{norm} < {gamma}");
        }
    }
}

#[test]
fn rod_placement_ranking_matches_exhaustive() {
    let spec =
        Rod1DSpec::new(1.0, 40, Conductivity::Quadratic).with_disturbance(RodDisturbance::Identity);
    let plant = heat1d_discretize(&spec).unwrap();
    let n = plant.dim();
    let half = |left: bool| {
        Mat::from_fn(n, 1, |i, _| {
            if (i < n / 2) == left {
                plant.b[(i, 0)]
            } else {
                0.0
            }
        })
    };
    let cands = vec![
        Candidate {
            label: "left".into(),
            matrix: half(true),
        },
        Candidate {
            label: "right".into(),
            matrix: half(false),
        },
        Candidate {
            label: "left again".into(),
            matrix: half(true),
        },
    ];
    let res = placement_sweep(
        &plant.a,
        plant.h.as_ref(),
        plant.r.as_ref(),
        &cands,
        Some(2),
    )
    .unwrap();
    let exhaustive: Vec<f64> = cands
        .iter()
        .map(|c| {
            let p = PlantSF::new(
                plant.a.clone(),
                c.matrix.clone(),
                plant.h.clone(),
                plant.r.clone(),
            )
            .unwrap();
            optimal_attenuation(&p).unwrap()
        })
        .collect();
    for (e, g) in res.candidates.iter().zip(&exhaustive) {
        assert_eq!(e.gamma, *g);
    }
    let argmin = if exhaustive[1] < exhaustive[0] { 1 } else { 0 };
    assert_eq!(res.best, argmin);
    assert_eq!(res.candidates[0].gamma, res.candidates[2].gamma);
    assert_ne!(res.best, 2);
}

#[test]
fn estimator_closed_loop_shape() {
    let mut r = rng(5);
    let plant = random_estimation_plant(&mut r, 8);
    let l = estimator_gain(&plant).unwrap();
    let sys = closed_loop_est(&plant, l.as_ref()).unwrap();
    assert!(is_stable(&sys).unwrap().0);
    let err = min_estimation_error(&plant).unwrap();
    let g0 = linalg::norm2_complex(freq_response(&sys, 0.0).unwrap().as_ref()).unwrap();
    assert!((g0 - err).abs() <= 1e-9 * err.max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lyapunov_certificate_bound(seed in any::<u64>()) {
        let mut r = rng(seed);
        let plant = random_plant(&mut r, 15);
        let k = state_feedback_gain(&plant).unwrap();
        let v = hinf_core::analysis::lyapunov_certificate(&plant, k.as_ref()).unwrap();
        prop_assert!(v <= -1.0 + 1e-9, "{v}");
    }

    #[test]
    fn duality_is_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let plant = random_estimation_plant(&mut r, 15);
        let dual = plant.dual().unwrap();
        let l = estimator_gain(&plant).unwrap();
        let k = state_feedback_gain(&dual).unwrap();
        let lt = l.transpose().to_owned();
        prop_assert!(max_abs_diff(&lt, &k) <= 1e-12 * max_abs(&k).max(f64::MIN_POSITIVE));
        let e = min_estimation_error(&plant).unwrap();
        let g = optimal_attenuation(&dual).unwrap();
        prop_assert!((e - g).abs() <= 1e-12 * g);
    }

    #[test]
    fn more_actuators_never_hurt(seed in any::<u64>(), extra in 1usize..3) {
        let mut r = rng(seed);
        let plant = random_plant(&mut r, 15);
        let n = plant.dim();
        let more = uniform(&mut r, n, extra);
        let b = linalg::hstack(plant.b.as_ref(), more.as_ref());
        let m = b.ncols();
        let bigger = PlantSF::new(plant.a.clone(), b, plant.h.clone(), Mat::identity(m, m)).unwrap();
        let g0 = optimal_attenuation(&plant).unwrap();
        let g1 = optimal_attenuation(&bigger).unwrap();
        prop_assert!(g1 <= g0 * (1.0 + 1e-12), "{g1} > {g0}");
    }

    #[test]
    fn closed_loop_is_stable(seed in any::<u64>()) {
        let mut r = rng(seed);
        let plant = random_plant(&mut r, 20);
        let k = state_feedback_gain(&plant).unwrap();
        prop_assert!(is_stable(&closed_loop_sf(&plant, k.as_ref()).unwrap()).unwrap().0);
    }
}

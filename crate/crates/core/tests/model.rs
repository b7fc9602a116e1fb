mod common;

use faer::Mat;
use hinf_core::{neg_solve, sym_eig, validate_generator, HinfError, SYMMETRY_TOL};
use proptest::prelude::*;

use common::{max_abs, max_abs_diff, random_generator, rng, uniform};

fn dirichlet_laplacian(n: usize, h: f64) -> Mat<f64> {
    let s = 1.0 / (h * h);
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            -2.0 * s
        } else if i.abs_diff(j) == 1 {
            s
        } else {
            0.0
        }
    })
}

#[test]
fn small_generators() {
    let g = validate_generator(Mat::from_fn(1, 1, |_, _| -1.0).as_ref(), SYMMETRY_TOL).unwrap();
    assert_eq!(g.coercivity(), 1.0);
    let two = Mat::from_fn(2, 2, |i, j| if i == j { -2.0 } else { 1.0 });
    let g = validate_generator(two.as_ref(), SYMMETRY_TOL).unwrap();
    assert!((g.coercivity() - 1.0).abs() < 1e-14);
    let eig = sym_eig(&g).unwrap();
    assert!((eig.eigenvalues[0] + 3.0).abs() < 1e-14);
    assert!((eig.eigenvalues[1] + 1.0).abs() < 1e-14);
    let skew = Mat::from_fn(2, 2, |i, j| [[0.0, 1.0], [-1.0, 0.0]][i][j]);
    assert!(matches!(
        validate_generator(skew.as_ref(), SYMMETRY_TOL),
        Err(HinfError::NotSymmetric { .. })
    ));
}

#[test]
fn stencil_spectrum_matches_closed_form() {
    let n = 40;
    let h = 1.0 / (n + 1) as f64;
    let g = validate_generator(dirichlet_laplacian(n, h).as_ref(), SYMMETRY_TOL).unwrap();
    let eig = sym_eig(&g).unwrap();
    let mut exact: Vec<f64> = (1..=n)
        .map(|j| {
            let s = (j as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin();
            -4.0 / (h * h) * s * s
        })
        .collect();
    exact.sort_by(f64::total_cmp);
    let scale = exact[0].abs();
    for (got, want) in eig.eigenvalues.iter().zip(&exact) {
        assert!((got - want).abs() <= 1e-11 * scale, "{got} vs {want}");
    }
}

#[test]
fn neg_solve_residual_50() {
    let mut r = rng(50);
    let a = random_generator(&mut r, 50);
    let v = uniform(&mut r, 50, 4);
    let x = neg_solve(&a, v.as_ref()).unwrap();
    let res = a.entries() * &x - &v;
    assert!(max_abs(&res) <= 1e-10 * max_abs(&v));
}

#[test]
fn sparse_storage_agrees_with_dense() {
    // A 100-point stencil is stored sparsely; the dense oracle is an explicit LU.
    let n = 100;
    let a = dirichlet_laplacian(n, 1.0);
    let g = validate_generator(a.as_ref(), SYMMETRY_TOL).unwrap();
    assert!(g.negated_sparse().is_some());
    let v = Mat::from_fn(n, 2, |i, j| ((i + 3 * j) % 7) as f64 - 3.0);
    let x = neg_solve(&g, v.as_ref()).unwrap();
    let lu = a.partial_piv_lu();
    let y = faer::linalg::solvers::Solve::solve(&lu, &v);
    assert!(max_abs_diff(&x, &y) <= 1e-10 * max_abs(&y));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coercivity_bounds_inverse(seed in any::<u64>(), n in 1usize..25) {
        let mut r = rng(seed);
        let a = random_generator(&mut r, n);
        let eig = sym_eig(&a).unwrap();
        let m = a.coercivity();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l <= -m * (1.0 - 1e-12)));
        let inv = neg_solve(&a, Mat::<f64>::identity(n, n).as_ref()).unwrap();
        let inv_norm = hinf_core::linalg::norm2(inv.as_ref()).unwrap();
        prop_assert!(inv_norm <= (1.0 + 1e-10) / m);
    }

    #[test]
    fn neg_solve_inverts_multiply(seed in any::<u64>(), n in 1usize..30) {
        let mut r = rng(seed);
        let a = random_generator(&mut r, n);
        let x = uniform(&mut r, n, 3);
        let v = a.entries() * &x;
        let back = neg_solve(&a, v.as_ref()).unwrap();
        prop_assert!(max_abs_diff(&back, &x) <= 1e-9 * max_abs(&x).max(1.0));
    }

    #[test]
    fn eigendecomposition_invariants(seed in any::<u64>(), n in 1usize..25) {
        let mut r = rng(seed);
        let a = random_generator(&mut r, n);
        let eig = sym_eig(&a).unwrap();
        let v = &eig.eigenvectors;
        let vtv = v.transpose() * v;
        prop_assert!(max_abs_diff(&vtv, &Mat::identity(n, n)) <= 1e-10);
        let lam = Mat::from_fn(n, n, |i, j| if i == j { eig.eigenvalues[i] } else { 0.0 });
        let rec = v * &lam * v.transpose();
        let a_norm = hinf_core::linalg::norm2(a.entries()).unwrap();
        let err = hinf_core::linalg::norm2((rec - a.entries()).as_ref()).unwrap();
        prop_assert!(err <= 1e-10 * a_norm);
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

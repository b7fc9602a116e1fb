#![allow(dead_code)]

use faer::Mat;
use hinf_core::{validate_generator, PlantEst, PlantSF, SymmetricGenerator, SYMMETRY_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat<f64> {
    Mat::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// `A = −(GGᵀ/n + δI)` with `δ ∈ [0.05, 0.5]`.
pub fn random_generator(rng: &mut ChaCha8Rng, n: usize) -> SymmetricGenerator {
    let g = uniform(rng, n, n);
    let shift = rng.gen_range(0.05..0.5);
    let ggt = &g * g.transpose();
    let a = Mat::from_fn(n, n, |i, j| {
        let s = 0.5 * (ggt[(i, j)] + ggt[(j, i)]) / n as f64;
        -(s + if i == j { shift } else { 0.0 })
    });
    validate_generator(a.as_ref(), SYMMETRY_TOL).unwrap()
}

/// A validated plant of order `n` with `R = I`.
pub fn random_plant_of_order(rng: &mut ChaCha8Rng, n: usize) -> PlantSF {
    let a = random_generator(rng, n);
    let m = rng.gen_range(1..=3);
    let q = rng.gen_range(1..=3);
    let b = uniform(rng, n, m);
    let h = uniform(rng, n, q);
    PlantSF::new(a, b, h, Mat::identity(m, m)).unwrap()
}

pub fn random_plant(rng: &mut ChaCha8Rng, max_n: usize) -> PlantSF {
    let n = rng.gen_range(2..=max_n);
    random_plant_of_order(rng, n)
}

pub fn random_estimation_plant(rng: &mut ChaCha8Rng, max_n: usize) -> PlantEst {
    let n = rng.gen_range(2..=max_n);
    let a = random_generator(rng, n);
    let p = rng.gen_range(1..=3);
    let q = rng.gen_range(1..=3);
    let c = uniform(rng, p, n);
    let qm = uniform(rng, q, n);
    let s = Mat::from_fn(p, p, |i, j| if i == j { 1.0 + 0.5 * i as f64 } else { 0.1 });
    PlantEst::new(a, c, qm, s).unwrap()
}

pub fn max_abs_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut d = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            d = d.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    d
}

pub fn max_abs(a: &Mat<f64>) -> f64 {
    max_abs_diff(a, &Mat::zeros(a.nrows(), a.ncols()))
}

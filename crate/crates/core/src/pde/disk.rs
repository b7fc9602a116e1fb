use std::cell::Cell;
use std::f64::consts::PI;

use faer::Mat;
use quadrature::double_exponential;
use serde::Serialize;

use super::KernelSamples;
use crate::error::{HinfError, Result};
use crate::model::{validate_generator, PlantEst, SYMMETRY_TOL};

/// Relative accuracy requested from [`disk_estimator_kernel`].
pub const DISK_KERNEL_RTOL: f64 = 1e-6;

/// Heat conduction on the unit disk, measured by the average over the
/// concentric disk of radius `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiskSpec {
    /// Radial intervals between the center and the boundary.
    pub n_r: usize,
    pub n_theta: usize,
    pub rho: f64,
}

impl DiskSpec {
    pub fn new(n_r: usize, n_theta: usize) -> Self {
        Self {
            n_r,
            n_theta,
            rho: 0.25,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_r < 2 {
            return Err(HinfError::InvalidSpec(format!("n_r = {} < 2", self.n_r)));
        }
        if self.n_theta < 4 {
            return Err(HinfError::InvalidSpec(format!(
                "n_theta = {} < 4",
                self.n_theta
            )));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(HinfError::InvalidSpec(format!(
                "sensor radius {} not in (0, 1)",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Finite-volume polar grid: one center cell and `n_r − 1` rings of
/// `n_theta` cells, with the boundary circle held at zero.
#[derive(Debug, Clone)]
pub struct DiskGrid {
    pub spec: DiskSpec,
    pub dr: f64,
    pub dtheta: f64,
    /// `(r, θ)` per node; node 0 is the center.
    pub nodes: Vec<(f64, f64)>,
    pub areas: Vec<f64>,
    /// Symmetric couplings `(k, l, c)` with `k < l`.
    couplings: Vec<(usize, usize, f64)>,
    /// Conductance to the zero boundary, per node.
    boundary: Vec<f64>,
}

impl DiskGrid {
    pub fn new(spec: DiskSpec) -> Result<Self> {
        spec.validate()?;
        let (nr, nt) = (spec.n_r, spec.n_theta);
        let dr = 1.0 / nr as f64;
        let dtheta = 2.0 * PI / nt as f64;
        let idx = |i: usize, j: usize| 1 + (i - 1) * nt + (j % nt);
        let n = 1 + (nr - 1) * nt;

        let mut nodes = Vec::with_capacity(n);
        let mut areas = Vec::with_capacity(n);
        nodes.push((0.0, 0.0));
        areas.push(PI * dr * dr / 4.0);
        for i in 1..nr {
            let r = i as f64 * dr;
            for j in 0..nt {
                nodes.push((r, j as f64 * dtheta));
                areas.push(r * dr * dtheta);
            }
        }

        let mut couplings = Vec::new();
        let mut boundary = vec![0.0; n];
        for j in 0..nt {
            couplings.push((0, idx(1, j), 0.5 * dtheta));
        }
        for i in 1..nr {
            let r = i as f64 * dr;
            let outer = (r + 0.5 * dr) * dtheta / dr;
            let angular = dr / (r * dtheta);
            for j in 0..nt {
                let k = idx(i, j);
                let next = idx(i, j + 1);
                couplings.push((k.min(next), k.max(next), angular));
                if i + 1 < nr {
                    couplings.push((k, idx(i + 1, j), outer));
                } else {
                    boundary[k] = outer;
                }
            }
        }
        Ok(Self {
            spec,
            dr,
            dtheta,
            nodes,
            areas,
            couplings,
            boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Cell-center membership in the sensing disk.
    pub fn in_sensor(&self, k: usize) -> bool {
        self.nodes[k].0 <= self.spec.rho
    }

    /// The discrete Laplacian of node values (Dirichlet zero at `r = 1`).
    pub fn apply_laplacian(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.len() {
            return Err(HinfError::ShapeMismatch(format!(
                "{} values for {} nodes",
                u.len(),
                self.len()
            )));
        }
        let mut flux: Vec<f64> = self.boundary.iter().zip(u).map(|(c, v)| -c * v).collect();
        for &(k, l, c) in &self.couplings {
            let f = c * (u[l] - u[k]);
            flux[k] += f;
            flux[l] -= f;
        }
        Ok(flux.iter().zip(&self.areas).map(|(f, a)| f / a).collect())
    }

    /// `W^{-1/2} S W^{-1/2}` with `S` the stiffness matrix and `W` the areas.
    pub fn scaled_operator(&self) -> Mat<f64> {
        let n = self.len();
        let mut a = Mat::<f64>::zeros(n, n);
        for k in 0..n {
            a[(k, k)] = -self.boundary[k];
        }
        for &(k, l, c) in &self.couplings {
            a[(k, l)] += c;
            a[(l, k)] += c;
            a[(k, k)] -= c;
            a[(l, l)] -= c;
        }
        let s: Vec<f64> = self.areas.iter().map(|w| 1.0 / w.sqrt()).collect();
        Mat::from_fn(n, n, |i, j| a[(i, j)] * s[i] * s[j])
    }
}

/// Estimation plant for the disk: `C` integrates over the sensing disk,
/// `Q = I`, `S = [1]`.
pub fn disk_discretize(spec: &DiskSpec) -> Result<PlantEst> {
    let grid = DiskGrid::new(*spec)?;
    let n = grid.len();
    let a = validate_generator(grid.scaled_operator().as_ref(), SYMMETRY_TOL)?;
    let c = Mat::from_fn(1, n, |_, k| {
        if grid.in_sensor(k) {
            grid.areas[k].sqrt()
        } else {
            0.0
        }
    });
    PlantEst::new(a, c, Mat::identity(n, n), Mat::from_fn(1, 1, |_, _| 1.0))
}

/// Indicator of the sensing disk at each grid node.
pub fn disk_poisson_source(grid: &DiskGrid) -> Vec<f64> {
    (0..grid.len())
        .map(|k| if grid.in_sensor(k) { 1.0 } else { 0.0 })
        .collect()
}

/// Reads an `n×1` disk estimator gain as samples of its kernel function.
/// A boundary ring of zero values covers the outer half cell.
pub fn extract_estimator_kernel(l: &Mat<f64>, grid: &DiskGrid) -> Result<KernelSamples> {
    if l.ncols() != 1 || l.nrows() != grid.len() {
        return Err(HinfError::ShapeMismatch(format!(
            "gain is {}x{}, expected {}x1",
            l.nrows(),
            l.ncols(),
            grid.len()
        )));
    }
    let mut nodes: Vec<Vec<f64>> = grid.nodes.iter().map(|&(r, t)| vec![r, t]).collect();
    let mut values: Vec<f64> = (0..grid.len())
        .map(|k| l[(k, 0)] / grid.areas[k].sqrt())
        .collect();
    let mut weights = grid.areas.clone();
    let nt = grid.spec.n_theta;
    let inner = 1.0 - 0.5 * grid.dr;
    let ring = PI * (1.0 - inner * inner) / nt as f64;
    for j in 0..nt {
        nodes.push(vec![1.0, j as f64 * grid.dtheta]);
        values.push(0.0);
        weights.push(ring);
    }
    KernelSamples::new(vec!["r", "theta"], nodes, values, weights)
}

fn green_unchecked(r: f64, t: f64, r0: f64, t0: f64) -> f64 {
    let c = (t - t0).cos();
    let num = r * r + r0 * r0 - 2.0 * r * r0 * c;
    let den = r * r * r0 * r0 + 1.0 - 2.0 * r * r0 * c;
    (num / den).ln() / (4.0 * PI)
}

/// Dirichlet Green's function of the Laplacian on the unit disk.
pub fn disk_green(r: f64, theta: f64, r0: f64, theta0: f64) -> Result<f64> {
    for v in [r, r0] {
        if !(0.0..=1.0).contains(&v) {
            return Err(HinfError::OutOfDomain {
                value: v,
                lo: 0.0,
                hi: 1.0,
            });
        }
    }
    let dist2 = r * r + r0 * r0 - 2.0 * r * r0 * (theta - theta0).cos();
    if dist2 <= f64::EPSILON * f64::EPSILON {
        return Err(HinfError::CoincidentPoints);
    }
    Ok(green_unchecked(r, theta, r0, theta0))
}

/// `∫_Σ G(r, θ, r₀, θ₀) r₀ dr₀ dθ₀` by nested double-exponential quadrature.
/// The angular integral starts at `θ` and the radial one is split at `r`, so
/// the logarithmic singularity only ever sits at an interval endpoint.
pub fn disk_estimator_kernel(r: f64, theta: f64, spec: &DiskSpec) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(HinfError::OutOfDomain {
            value: r,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let rho = spec.rho;
    let inner_err = Cell::new(0.0f64);
    let radial = |r0: f64| {
        let out = double_exponential::integrate(
            |t0| green_unchecked(r, theta, r0, t0),
            theta,
            theta + 2.0 * PI,
            1e-14,
        );
        inner_err.set(inner_err.get().max(out.error_estimate * r0));
        out.integral * r0
    };
    let pieces: Vec<(f64, f64)> = if r > 0.0 && r < rho {
        vec![(0.0, r), (r, rho)]
    } else {
        vec![(0.0, rho)]
    };
    let (mut total, mut err) = (0.0, 0.0);
    for (a, b) in pieces {
        let out = double_exponential::integrate(radial, a, b, 1e-13);
        total += out.integral;
        err += out.error_estimate;
    }
    let err = err + inner_err.get() * rho;
    if !total.is_finite() || err > DISK_KERNEL_RTOL * total.abs() + 1e-15 {
        return Err(HinfError::QuadratureFailure {
            estimate: total,
            error: err,
        });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Radial solution of `Δu = 1_Σ`, `u(1) = 0`.
    fn radial_oracle(r: f64, rho: f64) -> f64 {
        let c = 0.5 * rho * rho;
        if r >= rho {
            c * r.ln()
        } else {
            0.25 * r * r + c * rho.ln() - 0.25 * rho * rho
        }
    }

    #[test]
    fn grid_geometry() {
        let g = DiskGrid::new(DiskSpec::new(4, 8)).unwrap();
        assert_eq!(g.len(), 1 + 3 * 8);
        let inner = 1.0 - 0.5 * g.dr;
        let total: f64 = g.areas.iter().sum();
        assert!((total - PI * inner * inner).abs() < 1e-13);
        assert!(DiskGrid::new(DiskSpec::new(1, 8)).is_err());
        assert!(DiskGrid::new(DiskSpec::new(4, 3)).is_err());
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let g = DiskGrid::new(DiskSpec::new(8, 12)).unwrap();
        let u: Vec<f64> = g.nodes.iter().map(|(r, _)| r * r - 1.0).collect();
        let lap = g.apply_laplacian(&u).unwrap();
        for v in lap {
            assert!((v - 4.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn scaled_operator_matches_laplacian() {
        let g = DiskGrid::new(DiskSpec::new(5, 6)).unwrap();
        let a = g.scaled_operator();
        let u: Vec<f64> = (0..g.len()).map(|k| (k as f64 * 0.37).sin()).collect();
        let lap = g.apply_laplacian(&u).unwrap();
        for k in 0..g.len() {
            let s: f64 = (0..g.len())
                .map(|l| a[(k, l)] * g.areas[l].sqrt() * u[l])
                .sum();
            assert!((s / g.areas[k].sqrt() - lap[k]).abs() < 1e-9 * (1.0 + lap[k].abs()));
        }
    }

    #[test]
    fn green_values() {
        assert_eq!(disk_green(1.0, 0.3, 0.5, 1.0).unwrap(), 0.0);
        assert!(disk_green(0.5, 0.2, 0.5, 0.2).is_err());
        assert!(disk_green(1.5, 0.2, 0.5, 0.2).is_err());
        let a = disk_green(0.2, 0.1, 0.7, 2.0).unwrap();
        let b = disk_green(0.7, 2.0, 0.2, 0.1).unwrap();
        assert!((a - b).abs() < 1e-15 && a < 0.0);
    }

    #[test]
    fn kernel_matches_radial_solution() {
        let spec = DiskSpec::new(8, 8);
        for r in [0.0, 0.1, 0.25, 0.4, 0.9, 1.0] {
            let k = disk_estimator_kernel(r, 0.7, &spec).unwrap();
            let e = radial_oracle(r, 0.25);
            assert!((k - e).abs() <= 1e-6 * e.abs() + 1e-14, "r={r}: {k} vs {e}");
        }
    }
}

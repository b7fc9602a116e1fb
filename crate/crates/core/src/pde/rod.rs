use faer::Mat;
use serde::Serialize;

use super::KernelSamples;
use crate::error::{HinfError, Result};
use crate::model::{validate_generator, PlantSF, SYMMETRY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Conductivity {
    Constant(f64),
    /// `k(x) = x² + 1`.
    Quadratic,
}

impl Conductivity {
    pub fn at(&self, x: f64) -> f64 {
        match *self {
            Conductivity::Constant(k) => k,
            Conductivity::Quadratic => x * x + 1.0,
        }
    }
}

/// How the scalar disturbance enters the rod.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum RodDisturbance {
    /// A spatially uniform scalar, `H = √h·𝟙`.
    #[default]
    Scalar,
    /// An independent disturbance at every node, `H = I`.
    Identity,
}

/// Heat conduction on `[0, ℓ]` with zero temperature at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rod1DSpec {
    pub length: f64,
    /// Interior node count.
    pub n: usize,
    pub conductivity: Conductivity,
    pub disturbance: RodDisturbance,
}

impl Rod1DSpec {
    pub fn new(length: f64, n: usize, conductivity: Conductivity) -> Self {
        Self {
            length,
            n,
            conductivity,
            disturbance: RodDisturbance::Scalar,
        }
    }

    pub fn with_disturbance(mut self, d: RodDisturbance) -> Self {
        self.disturbance = d;
        self
    }

    pub fn step(&self) -> f64 {
        self.length / (self.n + 1) as f64
    }

    /// Interior node positions `x_i = i·h`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        (1..=self.n).map(|i| i as f64 * h).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(HinfError::InvalidSpec(
                "rod needs at least one interior node".into(),
            ));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(HinfError::InvalidSpec(format!(
                "rod length {} must be positive",
                self.length
            )));
        }
        if let Conductivity::Constant(k) = self.conductivity {
            if !(k > 0.0) || !k.is_finite() {
                return Err(HinfError::InvalidSpec(format!(
                    "conductivity {k} must be positive"
                )));
            }
        }
        Ok(())
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if !(0.0..=self.length).contains(&x) {
            return Err(HinfError::OutOfDomain {
                value: x,
                lo: 0.0,
                hi: self.length,
            });
        }
        Ok(())
    }
}

/// Conservative three-point stencil with conductivity sampled at midpoints.
pub fn heat1d_discretize(spec: &Rod1DSpec) -> Result<PlantSF> {
    spec.validate()?;
    let n = spec.n;
    let h = spec.step();
    let k_mid: Vec<f64> = (0..=n)
        .map(|i| spec.conductivity.at((i as f64 + 0.5) * h))
        .collect();
    let inv_h2 = 1.0 / (h * h);
    let a = Mat::from_fn(n, n, |i, j| {
        if i == j {
            -(k_mid[i] + k_mid[i + 1]) * inv_h2
        } else if j == i + 1 {
            k_mid[i + 1] * inv_h2
        } else if i == j + 1 {
            k_mid[i] * inv_h2
        } else {
            0.0
        }
    });
    let a = validate_generator(a.as_ref(), SYMMETRY_TOL)?;
    let sqrt_h = h.sqrt();
    let b = Mat::from_fn(n, 1, |_, _| sqrt_h);
    let hmat = match spec.disturbance {
        RodDisturbance::Scalar => Mat::from_fn(n, 1, |_, _| sqrt_h),
        RodDisturbance::Identity => Mat::identity(n, n),
    };
    PlantSF::new(a, b, hmat, Mat::from_fn(1, 1, |_, _| 1.0))
}

/// The continuous optimal feedback kernel `g`, with `u = ∫ g(s) z(s) ds`.
pub fn gain_kernel_g(s: f64, spec: &Rod1DSpec) -> Result<f64> {
    spec.check_domain(s)?;
    let l = spec.length;
    Ok(match spec.conductivity {
        Conductivity::Constant(k) => s * (s - l) / (2.0 * k),
        Conductivity::Quadratic => {
            0.5 * ((s * s + 1.0).ln() - (l * l + 1.0).ln() * s.atan() / l.atan())
        }
    })
}

/// Green's function of `z ↦ (k z')'` with zero boundary values.
pub fn green1d(x: f64, s: f64, spec: &Rod1DSpec) -> Result<f64> {
    spec.check_domain(x)?;
    spec.check_domain(s)?;
    let (lo, hi) = if x <= s { (x, s) } else { (s, x) };
    let l = spec.length;
    Ok(match spec.conductivity {
        Conductivity::Constant(k) => lo * (hi - l) / (l * k),
        Conductivity::Quadratic => lo.atan() * (hi.atan() / l.atan() - 1.0),
    })
}

/// Reads a `1×n` rod gain as samples of its kernel function. The endpoints
/// carry value zero and half weight so the weights integrate over `[0, ℓ]`.
pub fn extract_feedback_kernel(k: &Mat<f64>, spec: &Rod1DSpec) -> Result<KernelSamples> {
    spec.validate()?;
    if k.nrows() != 1 || k.ncols() != spec.n {
        return Err(HinfError::ShapeMismatch(format!(
            "gain is {}x{}, expected 1x{}",
            k.nrows(),
            k.ncols(),
            spec.n
        )));
    }
    let h = spec.step();
    let scale = 1.0 / h.sqrt();
    let mut nodes = vec![vec![0.0]];
    let mut values = vec![0.0];
    let mut weights = vec![0.5 * h];
    for (i, x) in spec.nodes().into_iter().enumerate() {
        nodes.push(vec![x]);
        values.push(k[(0, i)] * scale);
        weights.push(h);
    }
    nodes.push(vec![spec.length]);
    values.push(0.0);
    weights.push(0.5 * h);
    KernelSamples::new(vec!["x"], nodes, values, weights)
}

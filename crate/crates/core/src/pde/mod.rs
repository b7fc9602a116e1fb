//! Discretized heat-equation plants and their analytic reference kernels.
//!
//! Every discretization is written in an orthonormal basis: node values are
//! multiplied by the square root of their cell measure, so the discrete
//! inner product is the plain Euclidean one and `Aᵀ` is the adjoint of `A`.

mod disk;
mod irregular;
mod rod;

use std::io::Write;

use serde::Serialize;

pub use disk::{
    disk_discretize, disk_estimator_kernel, disk_green, disk_poisson_source,
    extract_estimator_kernel, DiskGrid, DiskSpec, DISK_KERNEL_RTOL,
};
pub use irregular::{irregular2d_discretize, IrregularGrid, IrregularSpec, Square};
pub use rod::{
    extract_feedback_kernel, gain_kernel_g, green1d, heat1d_discretize, Conductivity, Rod1DSpec,
    RodDisturbance,
};

use crate::error::{HinfError, Result};

/// A function sampled at quadrature nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSamples {
    /// Coordinate labels, e.g. `["x"]` or `["r", "theta"]`.
    pub axes: Vec<&'static str>,
    pub nodes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl KernelSamples {
    pub fn new(
        axes: Vec<&'static str>,
        nodes: Vec<Vec<f64>>,
        values: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if nodes.len() != values.len() || values.len() != weights.len() {
            return Err(HinfError::ShapeMismatch(format!(
                "{} nodes, {} values, {} weights",
                nodes.len(),
                values.len(),
                weights.len()
            )));
        }
        if nodes.iter().any(|p| p.len() != axes.len()) {
            return Err(HinfError::ShapeMismatch(
                "node dimension differs from axes".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(HinfError::ShapeMismatch("weights must be positive".into()));
        }
        Ok(Self {
            axes,
            nodes,
            values,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ wᵢ`, the measure of the sampled domain.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ wᵢ fᵢ`.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum()
    }

    /// CSV with columns `axes..., value, weight`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<&str> = self
            .axes
            .iter()
            .copied()
            .chain(["value", "weight"])
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for ((p, v), w) in self.nodes.iter().zip(&self.values).zip(&self.weights) {
            for c in p {
                write!(out, "{c:.12e},")?;
            }
            writeln!(out, "{v:.12e},{w:.12e}")?;
        }
        Ok(())
    }
}

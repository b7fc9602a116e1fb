use faer::Mat;
use serde::Serialize;

use crate::error::{HinfError, Result};
use crate::model::{validate_generator, PlantSF, SYMMETRY_TOL};

const DOMAIN_SIDE: f64 = 4.0;
const GEOMETRY_EPS: f64 = 1e-9;

/// Closed axis-aligned square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Square {
    pub center: (f64, f64),
    pub side: f64,
}

impl Square {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let half = 0.5 * self.side + GEOMETRY_EPS;
        (x - self.center.0).abs() <= half && (y - self.center.1).abs() <= half
    }
}

/// A 4×4 plate with a circular hole, heated over one square and disturbed
/// over another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IrregularSpec {
    pub h: f64,
    pub hole_center: (f64, f64),
    pub hole_radius: f64,
    pub actuator: Square,
    pub disturbance: Square,
}

impl IrregularSpec {
    pub fn new(h: f64) -> Self {
        Self {
            h,
            hole_center: (3.0, 1.0),
            hole_radius: 0.4,
            actuator: Square {
                center: (2.0, 2.0),
                side: 1.0,
            },
            disturbance: Square {
                center: (1.0, 1.3),
                side: 0.4,
            },
        }
    }

    pub fn with_actuator(mut self, actuator: Square) -> Self {
        self.actuator = actuator;
        self
    }

    /// Lattice intervals per side.
    fn intervals(&self) -> Result<usize> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(HinfError::InvalidSpec(format!(
                "grid step {} must be positive",
                self.h
            )));
        }
        let k = (DOMAIN_SIDE / self.h).round();
        if (k * self.h - DOMAIN_SIDE).abs() > 1e-9 || k < 4.0 {
            return Err(HinfError::InvalidSpec(format!(
                "grid step {} must divide 4 into at least 4 intervals",
                self.h
            )));
        }
        let (cx, cy) = self.hole_center;
        let rad = self.hole_radius;
        if !(rad > 0.0)
            || cx - rad <= 0.0
            || cy - rad <= 0.0
            || cx + rad >= DOMAIN_SIDE
            || cy + rad >= DOMAIN_SIDE
        {
            return Err(HinfError::InvalidSpec(
                "hole must lie strictly inside the plate".into(),
            ));
        }
        Ok(k as usize)
    }

    fn in_hole(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.hole_center.0, y - self.hole_center.1);
        dx * dx + dy * dy <= self.hole_radius * self.hole_radius + GEOMETRY_EPS
    }
}

/// Lattice nodes kept after removing the boundary and the hole.
#[derive(Debug, Clone)]
pub struct IrregularGrid {
    pub spec: IrregularSpec,
    pub nodes: Vec<(f64, f64)>,
    /// Node index by lattice position, `None` where removed.
    index: Vec<Option<usize>>,
    intervals: usize,
}

impl IrregularGrid {
    pub fn new(spec: IrregularSpec) -> Result<Self> {
        let k = spec.intervals()?;
        let mut nodes = Vec::new();
        let mut index = vec![None; (k + 1) * (k + 1)];
        for j in 1..k {
            for i in 1..k {
                let (x, y) = (i as f64 * spec.h, j as f64 * spec.h);
                if !spec.in_hole(x, y) {
                    index[j * (k + 1) + i] = Some(nodes.len());
                    nodes.push((x, y));
                }
            }
        }
        Ok(Self {
            spec,
            nodes,
            index,
            intervals: k,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn at(&self, i: usize, j: usize) -> Option<usize> {
        self.index[j * (self.intervals + 1) + i]
    }

    /// Five-point Laplacian with zero values off the kept node set.
    pub fn laplacian(&self) -> Mat<f64> {
        let n = self.len();
        let k = self.intervals;
        let inv_h2 = 1.0 / (self.spec.h * self.spec.h);
        let mut a = Mat::<f64>::zeros(n, n);
        for j in 1..k {
            for i in 1..k {
                let Some(p) = self.at(i, j) else { continue };
                a[(p, p)] = -4.0 * inv_h2;
                for (ni, nj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                    if let Some(q) = self.at(ni, nj) {
                        a[(p, q)] = inv_h2;
                    }
                }
            }
        }
        a
    }

    /// `h·1_square` per node: the indicator in the orthonormal basis.
    pub fn indicator(&self, sq: &Square) -> Mat<f64> {
        let h = self.spec.h;
        Mat::from_fn(self.len(), 1, |p, _| {
            let (x, y) = self.nodes[p];
            if sq.contains(x, y) {
                h
            } else {
                0.0
            }
        })
    }
}

/// Five-point finite differences on the holed plate; the hole boundary is a
/// node-in/node-out staircase.
pub fn irregular2d_discretize(spec: &IrregularSpec) -> Result<PlantSF> {
    let grid = IrregularGrid::new(*spec)?;
    let a = validate_generator(grid.laplacian().as_ref(), SYMMETRY_TOL)?;
    let b = grid.indicator(&spec.actuator);
    let h = grid.indicator(&spec.disturbance);
    PlantSF::new(a, b, h, Mat::from_fn(1, 1, |_, _| 1.0))
}

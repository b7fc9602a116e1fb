use faer::Mat;
use serde::Serialize;

use super::riccati::{care_feasible, lqr_gain, riccati_gain, CareOutcome};
use crate::error::{HinfError, Result};
use crate::model::PlantSF;

/// Default relative bracket width for the γ-iteration.
pub const DEFAULT_BISECTION_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectionStep {
    pub gamma: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct BisectionTrace {
    pub iterations: Vec<BisectionStep>,
    pub final_gamma: f64,
    pub final_gain: Mat<f64>,
    pub tolerance: f64,
    /// The LQR closed-loop norm that seeds the bracket.
    pub upper_bound: f64,
}

impl BisectionTrace {
    pub fn iteration_count(&self) -> usize {
        self.iterations.len()
    }

    /// Every feasible level lies above every infeasible one.
    pub fn is_monotone(&self) -> bool {
        let lowest_feasible = self
            .iterations
            .iter()
            .filter(|s| s.feasible)
            .map(|s| s.gamma)
            .fold(f64::INFINITY, f64::min);
        self.iterations
            .iter()
            .filter(|s| !s.feasible)
            .all(|s| s.gamma < lowest_feasible)
    }
}

/// γ-iteration over `[0, γ_ub]` with the LQR closed-loop norm as `γ_ub`.
pub fn gamma_bisection(plant: &PlantSF, tol: f64) -> Result<BisectionTrace> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(HinfError::OutOfDomain {
            value: tol,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let lqr = lqr_gain(plant)?;
    let upper = lqr.gamma_ub;
    let mut trace = BisectionTrace {
        iterations: Vec::new(),
        final_gamma: upper,
        final_gain: lqr.gain,
        tolerance: tol,
        upper_bound: upper,
    };
    if upper == 0.0 {
        return Ok(trace);
    }
    let (mut lo, mut hi) = (0.0, upper);
    let mut best_x = None;
    while hi - lo > tol * upper {
        let mid = 0.5 * (lo + hi);
        let feasible = match care_feasible(plant, mid)? {
            CareOutcome::Feasible(sol) => {
                best_x = Some(sol.x);
                true
            }
            CareOutcome::Infeasible(_) => false,
        };
        trace.iterations.push(BisectionStep {
            gamma: mid,
            feasible,
        });
        if feasible {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    trace.final_gamma = hi;
    if let Some(x) = best_x {
        trace.final_gain = riccati_gain(plant, x.as_ref())?;
    }
    Ok(trace)
}

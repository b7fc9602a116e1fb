//! Closed-form H∞-optimal state feedback and estimation for systems whose
//! generator is symmetric and strictly negative, together with an
//! independent Riccati-based baseline, PDE test problems and a benchmark
//! harness comparing the two.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bench;
pub mod error;
pub mod linalg;
pub mod model;
pub mod pde;
pub mod sparse;
pub mod synthesis;

pub use error::{HinfError, Result};
pub use model::{
    neg_solve, sym_eig, validate_generator, PlantEst, PlantSF, SpectralDecomposition, StateSpace,
    SymmetricGenerator, SYMMETRY_TOL,
};
pub use synthesis::{
    closed_loop_est, closed_loop_sf, estimator_gain, min_estimation_error, optimal_attenuation,
    placement_sweep, sensor_placement_sweep, state_feedback_gain, synthesize_estimator,
    synthesize_state_feedback, Candidate, PlacementEntry, PlacementResult, SynthesisOutcome,
};

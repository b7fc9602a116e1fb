//! Independent verification: frequency response, H∞ norms, Riccati
//! feasibility and the γ-iteration baseline.

mod bisection;
mod certificate;
mod frequency;
mod riccati;

pub use bisection::{gamma_bisection, BisectionStep, BisectionTrace, DEFAULT_BISECTION_TOL};
pub use certificate::{lyapunov_certificate, lyapunov_scale};
pub use frequency::{
    default_grid, freq_response, gain_at, hinf_norm, hinf_norm_sweep, is_stable, FrequencyGrid,
    IMAG_AXIS_TOL,
};
pub use riccati::{
    care_feasible, lqr_gain, lqr_weighted, riccati_gain, CareOutcome, Infeasibility, LqrOutcome,
    RiccatiSolution, LQR_NORM_TOL,
};

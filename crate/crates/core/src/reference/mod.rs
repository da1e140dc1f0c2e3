//! Ground truth for the reduced-order model: Bessel functions of complex
//! argument, analytical and QA transfer functions, a finite-volume PDE solver
//! and the steady conduction profile.

pub mod analytical;
pub mod bessel;
pub mod fd;
pub mod steady;
pub mod sweep;

pub use analytical::{analytical_frequency_response, qa_frequency_response, ComplexFreq};
pub use bessel::bessel_j;
pub use fd::{fd_simulate, EnergyBalance, FdConfig, FdRun, FdSolver, RadialField};
pub use steady::{steady_state_profile, steady_state_temperature};
pub use sweep::{frequency_sweep, log_grid, SweepPoint};

use crate::impedance::AdmittancePoly;

/// Real admittance of a radial field: trapezoidal average of the calibration
/// polynomial over the cross-section.
pub fn fd_admittance(field: &RadialField, poly: &AdmittancePoly) -> f64 {
    field.radial_average(|t| poly.eval(t))
}

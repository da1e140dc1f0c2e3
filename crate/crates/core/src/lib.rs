//! Impedance-based internal temperature estimation for cylindrical
//! lithium-ion cells.
//!
//! The crate contains
//!
//! * [`thermal`]: the two-state polynomial-approximation thermal model,
//! * [`reference`]: ground truth used to validate it (complex Bessel
//!   functions, analytical transfer functions, a finite-volume PDE solver),
//! * [`impedance`]: the admittance-temperature calibration and the nonlinear
//!   measurement function with its Jacobians,
//! * [`estimation`]: EKF/DEKF with admittance measurements and KF/DKF
//!   baselines with surface temperature,
//! * [`identification`]: offline Nelder-Mead fitting of thermal parameters,
//! * [`io`]: telemetry schemas, synthetic drive cycles and file formats.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod identification;
pub mod impedance;
pub mod io;
pub mod par;
pub mod quadrature;
pub mod reference;
pub mod thermal;

pub use error::{Error, Result};
pub use par::Exec;
pub use thermal::{FreqResponse, HeatInput, StateSpaceModel, ThermalParams, ThermalState};

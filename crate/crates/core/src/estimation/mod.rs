//! Kalman estimators of the cell's thermal state and convection coefficient.
//!
//! * EKF: admittance measurement, known `h`.
//! * DEKF: admittance measurement, `h` estimated by a parallel scalar filter.
//! * KF / DKF: the same recursions with surface temperature as the measurement.

mod config;
mod filter;
mod run;

pub use config::{EstimatorConfig, FilterKind, MeasurementKind, ParamJacobian};
pub use filter::{Correction, EstimatorState, Filter, H_FLOOR};
pub use run::{
    rmse, rmse_series, run_batch, run_estimator, run_open_loop, BatchJob, Channel, EstimateTrace,
    TracePoint,
};

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::ThermalState;

/// Signal used by the measurement update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    /// Real admittance at the calibration frequency (nonlinear in the state).
    #[default]
    Admittance,
    /// Surface temperature (linear in the state).
    SurfaceTemp,
}

/// How the parameter filter linearizes the measurement in `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamJacobian {
    /// Direct sensitivity plus the recursively propagated sensitivity of the
    /// state estimate to `h`.
    #[default]
    Total,
    /// Direct sensitivity `df/dh` at the current state only.
    Partial,
}

/// The four filter variants: measurement kind crossed with dual estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Ekf,
    Dekf,
    Kf,
    Dkf,
}

impl FilterKind {
    pub fn of(cfg: &EstimatorConfig) -> Self {
        match (cfg.measurement_kind, cfg.dual) {
            (MeasurementKind::Admittance, false) => FilterKind::Ekf,
            (MeasurementKind::Admittance, true) => FilterKind::Dekf,
            (MeasurementKind::SurfaceTemp, false) => FilterKind::Kf,
            (MeasurementKind::SurfaceTemp, true) => FilterKind::Dkf,
        }
    }

    pub fn measurement_kind(self) -> MeasurementKind {
        match self {
            FilterKind::Ekf | FilterKind::Dekf => MeasurementKind::Admittance,
            FilterKind::Kf | FilterKind::Dkf => MeasurementKind::SurfaceTemp,
        }
    }

    pub fn is_dual(self) -> bool {
        matches!(self, FilterKind::Dekf | FilterKind::Dkf)
    }

    /// Copy of `cfg` switched to this variant.
    pub fn apply(self, cfg: &EstimatorConfig) -> EstimatorConfig {
        EstimatorConfig {
            measurement_kind: self.measurement_kind(),
            dual: self.is_dual(),
            ..cfg.clone()
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Ekf => "ekf",
            FilterKind::Dekf => "dekf",
            FilterKind::Kf => "kf",
            FilterKind::Dkf => "dkf",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ekf" => Ok(FilterKind::Ekf),
            "dekf" => Ok(FilterKind::Dekf),
            "kf" => Ok(FilterKind::Kf),
            "dkf" => Ok(FilterKind::Dkf),
            _ => Err(Error::Configuration(format!("unknown filter `{s}`"))),
        }
    }
}

/// Noise tuning and initialization of an estimator run.
///
/// `sigma_n` (Ohm^-1) is the admittance noise and `sigma_t` (degC) the
/// surface-temperature noise; only the one matching `measurement_kind` is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub sigma_n: f64,
    pub sigma_t: f64,
    pub beta_v: f64,
    pub beta_e: f64,
    pub dt: f64,
    pub x0: ThermalState,
    pub p0_x: [[f64; 2]; 2],
    pub h0: f64,
    pub p0_h: f64,
    pub measurement_kind: MeasurementKind,
    pub dual: bool,
    pub param_jacobian: ParamJacobian,
    /// Gauss-Newton relinearizations of the state update; 1 is the plain EKF.
    pub state_iterations: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            sigma_n: 1e-4,
            sigma_t: 0.1,
            beta_v: 0.1,
            beta_e: 2.5,
            dt: 1.0,
            x0: ThermalState::new(25.0, 0.0),
            p0_x: [[25.0, 0.0], [0.0, 1.0]],
            h0: 39.3,
            p0_h: 25.0,
            measurement_kind: MeasurementKind::Admittance,
            dual: false,
            param_jacobian: ParamJacobian::Total,
            state_iterations: 1,
        }
    }
}

impl EstimatorConfig {
    pub fn p0_x_matrix(&self) -> Matrix2<f64> {
        let p = self.p0_x;
        Matrix2::new(p[0][0], p[0][1], p[1][0], p[1][1])
    }

    /// Measurement noise variance for the configured measurement.
    pub fn r_n(&self) -> f64 {
        let s = match self.measurement_kind {
            MeasurementKind::Admittance => self.sigma_n,
            MeasurementKind::SurfaceTemp => self.sigma_t,
        };
        s * s
    }

    /// State process-noise covariance `beta_v^2 diag(2, 2)`.
    pub fn r_v(&self) -> Matrix2<f64> {
        Matrix2::identity() * (2.0 * self.beta_v * self.beta_v)
    }

    /// Parameter random-walk variance per step.
    pub fn r_e(&self) -> f64 {
        self.beta_e * self.beta_e
    }

    /// `beta_e` and `p0_h` may be zero, which freezes the parameter filter.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        positive("sigma_n", self.sigma_n)?;
        positive("sigma_t", self.sigma_t)?;
        positive("beta_v", self.beta_v)?;
        positive("dt", self.dt)?;
        positive("h0", self.h0)?;
        for (name, v) in [("beta_e", self.beta_e), ("p0_h", self.p0_h)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        if self.state_iterations == 0 {
            return Err(Error::invalid("state_iterations", "must be >= 1"));
        }
        if !self.x0.is_finite() {
            return Err(Error::invalid("x0", "non-finite"));
        }
        let p = self.p0_x_matrix();
        if !p.iter().all(|v| v.is_finite()) || (p[(0, 1)] - p[(1, 0)]).abs() > 1e-12 * p.abs().max()
        {
            return Err(Error::invalid("p0_x", "must be finite and symmetric"));
        }
        if SymmetricEigen::new(p).eigenvalues.min() <= 0.0 {
            return Err(Error::invalid("p0_x", "must be positive definite"));
        }
        Ok(())
    }
}

//! Admittance-temperature calibration and the nonlinear measurement model.
//!
//! At a fixed frequency the real admittance of a uniformly tempered cell is
//! `Y'(T) = a1 + a2 T + a3 T^2`. For a radial field the cell sees the
//! cross-section average of that polynomial, which for the quartic PA profile
//! has a closed form in `(T_bar, gamma_bar, T_surf)`.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::{SurfaceCoefficients, ThermalParams, ThermalState};

/// Calibration polynomial `Y'(T) = a1 + a2 T + a3 T^2` (Ohm^-1, T in degC).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyFile", into = "PolyFile")]
pub struct AdmittancePoly {
    a1: f64,
    a2: f64,
    a3: f64,
    freq_hz: f64,
    t_min: f64,
    t_max: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyFile {
    a1: f64,
    a2: f64,
    a3: f64,
    freq_hz: f64,
    t_min: f64,
    t_max: f64,
}

impl TryFrom<PolyFile> for AdmittancePoly {
    type Error = Error;
    fn try_from(f: PolyFile) -> Result<Self> {
        AdmittancePoly::new(f.a1, f.a2, f.a3, f.freq_hz, (f.t_min, f.t_max))
    }
}

impl From<AdmittancePoly> for PolyFile {
    fn from(p: AdmittancePoly) -> Self {
        PolyFile {
            a1: p.a1,
            a2: p.a2,
            a3: p.a3,
            freq_hz: p.freq_hz,
            t_min: p.t_min,
            t_max: p.t_max,
        }
    }
}

impl AdmittancePoly {
    /// Validates finiteness, `freq_hz > 0` and strict monotonicity on the range.
    pub fn new(a1: f64, a2: f64, a3: f64, freq_hz: f64, valid_range: (f64, f64)) -> Result<Self> {
        let (t_min, t_max) = valid_range;
        if ![a1, a2, a3, t_min, t_max].iter().all(|v| v.is_finite()) {
            return Err(Error::Calibration("non-finite coefficient or range".into()));
        }
        if !(freq_hz.is_finite() && freq_hz > 0.0) {
            return Err(Error::Calibration(format!(
                "frequency must be > 0, got {freq_hz}"
            )));
        }
        if !(t_min < t_max) {
            return Err(Error::Calibration(format!(
                "empty range [{t_min}, {t_max}]"
            )));
        }
        let d0 = a2 + 2.0 * a3 * t_min;
        let d1 = a2 + 2.0 * a3 * t_max;
        if !(d0 * d1 > 0.0) {
            return Err(Error::Calibration(format!(
                "polynomial is not strictly monotone on [{t_min}, {t_max}] (slopes {d0}, {d1})"
            )));
        }
        Ok(Self {
            a1,
            a2,
            a3,
            freq_hz,
            t_min,
            t_max,
        })
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }
    pub fn a3(&self) -> f64 {
        self.a3
    }
    pub fn freq_hz(&self) -> f64 {
        self.freq_hz
    }
    pub fn valid_range(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    /// `Y'(t)` without range checks.
    pub fn eval(&self, t: f64) -> f64 {
        self.a1 + t * (self.a2 + t * self.a3)
    }

    pub fn slope(&self, t: f64) -> f64 {
        self.a2 + 2.0 * self.a3 * t
    }

    /// Admittance values at the ends of the valid range, ascending.
    pub fn image(&self) -> (f64, f64) {
        let (y0, y1) = (self.eval(self.t_min), self.eval(self.t_max));
        (y0.min(y1), y0.max(y1))
    }

    /// Built-in synthetic calibration at 215 Hz, see [`ArrheniusCurve`].
    pub fn default_calibration() -> Self {
        let curve = ArrheniusCurve::default();
        let samples = curve.samples(&DEFAULT_CALIBRATION_TEMPS);
        fit_admittance_poly(&samples, DEFAULT_FREQ_HZ)
            .expect("default calibration is monotone")
            .poly
    }
}

/// Calibration frequency of the built-in polynomial.
pub const DEFAULT_FREQ_HZ: f64 = 215.0;

/// Uniform temperatures at which the built-in calibration is sampled.
pub const DEFAULT_CALIBRATION_TEMPS: [f64; 9] =
    [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0];

/// Thermally activated admittance `Y'(T) = y_ref exp(-E (1/T_K - 1/T_ref,K))`,
/// the source of the synthetic calibration data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrheniusCurve {
    /// Admittance at `t_ref` (Ohm^-1).
    pub y_ref: f64,
    /// Reference temperature (degC).
    pub t_ref: f64,
    /// Activation temperature `E_a / R` (K).
    pub activation_k: f64,
}

impl Default for ArrheniusCurve {
    fn default() -> Self {
        Self {
            y_ref: 3.0,
            t_ref: 25.0,
            activation_k: 2000.0,
        }
    }
}

impl ArrheniusCurve {
    pub fn eval(&self, t: f64) -> f64 {
        let k = |c: f64| c + 273.15;
        self.y_ref * (-self.activation_k * (1.0 / k(t) - 1.0 / k(self.t_ref))).exp()
    }

    pub fn samples(&self, temps: &[f64]) -> Vec<(f64, f64)> {
        temps.iter().map(|&t| (t, self.eval(t))).collect()
    }
}

/// Outcome of a least-squares calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationFit {
    pub poly: AdmittancePoly,
    /// Root-mean-square residual of the fit (Ohm^-1).
    pub residual_rms: f64,
}

/// Least-squares quadratic through `(temperature, admittance)` samples; the
/// valid range is the span of the sampled temperatures.
pub fn fit_admittance_poly(samples: &[(f64, f64)], freq_hz: f64) -> Result<CalibrationFit> {
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.0).collect();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need samples at >= 3 distinct temperatures, got {}",
            distinct.len()
        )));
    }
    if samples
        .iter()
        .any(|(t, y)| !t.is_finite() || !y.is_finite())
    {
        return Err(Error::Calibration("non-finite calibration sample".into()));
    }
    let (t_min, t_max) = (distinct[0], distinct[distinct.len() - 1]);
    // centre and scale the abscissa for conditioning
    let mid = 0.5 * (t_min + t_max);
    let half = 0.5 * (t_max - t_min);
    let n = samples.len();
    let design = DMatrix::from_fn(n, 3, |i, j| ((samples[i].0 - mid) / half).powi(j as i32));
    let rhs = DVector::from_iterator(n, samples.iter().map(|s| s.1));
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Calibration(e.to_string()))?;
    let (c0, c1, c2) = (coef[0], coef[1], coef[2]);
    // expand c0 + c1 u + c2 u^2 with u = (T - mid)/half
    let a3 = c2 / (half * half);
    let a2 = c1 / half - 2.0 * c2 * mid / (half * half);
    let a1 = c0 - c1 * mid / half + c2 * mid * mid / (half * half);
    let poly = AdmittancePoly::new(a1, a2, a3, freq_hz, (t_min, t_max))?;
    let residual = &design * &coef - &rhs;
    Ok(CalibrationFit {
        poly,
        residual_rms: (residual.norm_squared() / n as f64).sqrt(),
    })
}

/// `Y'` of a uniformly tempered cell; warns outside the calibrated range.
pub fn admittance_uniform(poly: &AdmittancePoly, t: f64) -> f64 {
    if t < poly.t_min || t > poly.t_max {
        warn!(
            "temperature {t:.3} degC outside calibrated range [{}, {}]",
            poly.t_min, poly.t_max
        );
    }
    poly.eval(t)
}

/// Cross-section average of `Y'(T(r))` over the quartic profile defined by
/// the state and a surface temperature.
pub fn admittance_from_state(
    poly: &AdmittancePoly,
    state: ThermalState,
    t_surf: f64,
    r_o: f64,
) -> f64 {
    let (a1, a2, a3) = (poly.a1, poly.a2, poly.a3);
    let (tb, g, ts) = (state.t_bar, state.gamma_bar, t_surf);
    a1 + a2 * tb + 3.0 * a3 * tb * tb + 2.0 * a3 * ts * ts - 4.0 * a3 * tb * ts
        + 15.0 * a3 * r_o * r_o * g * g / 32.0
        + 15.0 * a3 * r_o * tb * g / 8.0
        - 15.0 * a3 * r_o * ts * g / 8.0
}

/// Predicted admittance for state `state`, convection coefficient `h` and
/// coolant temperature `t_inf`; the remaining constants come from `params`.
pub fn measurement_fn(
    poly: &AdmittancePoly,
    state: ThermalState,
    h: f64,
    t_inf: f64,
    params: &ThermalParams,
) -> f64 {
    let sc = SurfaceCoefficients::new(params.kt(), h, params.r_o());
    admittance_from_state(poly, state, sc.eval(state, t_inf), params.r_o())
}

/// Partial derivatives of the averaged admittance with respect to
/// `(T_bar, gamma_bar, T_surf)` holding the others fixed.
fn partials(poly: &AdmittancePoly, state: ThermalState, ts: f64, r_o: f64) -> (f64, f64, f64) {
    let (a2, a3) = (poly.a2, poly.a3);
    let (tb, g) = (state.t_bar, state.gamma_bar);
    let d_tb = a2 + 6.0 * a3 * tb - 4.0 * a3 * ts + 15.0 * a3 * r_o * g / 8.0;
    let d_g = 15.0 * a3 * r_o * r_o * g / 16.0 + 15.0 * a3 * r_o * (tb - ts) / 8.0;
    let d_ts = 4.0 * a3 * (ts - tb) - 15.0 * a3 * r_o * g / 8.0;
    (d_tb, d_g, d_ts)
}

/// `(df/dT_bar, df/dgamma_bar)` of [`measurement_fn`], with the surface
/// temperature's own dependence on the state included.
pub fn measurement_jacobian_state(
    poly: &AdmittancePoly,
    state: ThermalState,
    h: f64,
    t_inf: f64,
    params: &ThermalParams,
) -> (f64, f64) {
    let r_o = params.r_o();
    let sc = SurfaceCoefficients::new(params.kt(), h, r_o);
    let ts = sc.eval(state, t_inf);
    let (d_tb, d_g, d_ts) = partials(poly, state, ts, r_o);
    (d_tb + d_ts * sc.c_t, d_g + d_ts * sc.c_g)
}

/// `df/dh` of [`measurement_fn`].
pub fn measurement_jacobian_h(
    poly: &AdmittancePoly,
    state: ThermalState,
    h: f64,
    t_inf: f64,
    params: &ThermalParams,
) -> f64 {
    let r_o = params.r_o();
    let ts = SurfaceCoefficients::new(params.kt(), h, r_o).eval(state, t_inf);
    let (_, _, d_ts) = partials(poly, state, ts, r_o);
    d_ts * SurfaceCoefficients::d_dh(params.kt(), h, r_o, state, t_inf)
}

/// Uniform temperature that would produce admittance `y`.
pub fn eis_volume_avg_temp(poly: &AdmittancePoly, y: f64) -> Result<f64> {
    let (lo, hi) = poly.image();
    if !(y >= lo && y <= hi) {
        return Err(Error::OutOfRange { value: y, lo, hi });
    }
    let (a, b, c) = (poly.a3, poly.a2, poly.a1 - y);
    let span = poly.t_max - poly.t_min;
    let inside = |t: f64| t >= poly.t_min - 1e-9 * span && t <= poly.t_max + 1e-9 * span;
    let root = if a.abs() * span < 1e-12 * b.abs() {
        -c / b
    } else {
        let disc = (b * b - 4.0 * a * c).max(0.0);
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let (r1, r2) = (q / a, c / q);
        match (inside(r1), inside(r2)) {
            (true, false) => r1,
            (false, true) => r2,
            (true, true) => unreachable!("monotone polynomial has one root in range"),
            (false, false) => {
                return Err(Error::Numerical(format!("no root of Y'(T) = {y} in range")));
            }
        }
    };
    // one Newton step to polish
    let t = root - (poly.eval(root) - y) / poly.slope(root);
    Ok(t.clamp(poly.t_min, poly.t_max))
}

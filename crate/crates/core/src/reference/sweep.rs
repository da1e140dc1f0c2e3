//! Frequency sweeps over the analytical, PA and QA models.

use super::analytical::{analytical_frequency_response, qa_frequency_response};
use crate::par::Exec;
use crate::thermal::{hz_to_omega, pa_frequency_response, FreqResponse, ThermalParams};

/// Responses of the three models at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub f_hz: f64,
    pub analytical: FreqResponse,
    pub pa: FreqResponse,
    pub qa: FreqResponse,
}

impl SweepPoint {
    pub fn is_finite(&self) -> bool {
        self.analytical.is_finite() && self.pa.is_finite() && self.qa.is_finite()
    }
}

/// Log-spaced grid from `f_min` to `f_max` inclusive.
pub fn log_grid(f_min: f64, f_max: f64, points_per_decade: usize) -> Vec<f64> {
    assert!(f_min > 0.0 && f_max >= f_min && points_per_decade > 0);
    let decades = (f_max / f_min).log10();
    let n = (decades * points_per_decade as f64).round() as usize;
    if n == 0 {
        return vec![f_min];
    }
    let (l0, l1) = (f_min.log10(), f_max.log10());
    (0..=n)
        .map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / n as f64))
        .collect()
}

pub fn sweep_point(params: &ThermalParams, f_hz: f64) -> SweepPoint {
    let w = hz_to_omega(f_hz);
    SweepPoint {
        f_hz,
        analytical: analytical_frequency_response(params, w),
        pa: pa_frequency_response(params, w),
        qa: qa_frequency_response(params, w),
    }
}

pub fn frequency_sweep(params: &ThermalParams, freqs_hz: &[f64], exec: Exec) -> Vec<SweepPoint> {
    exec.map(freqs_hz, |&f| sweep_point(params, f))
}

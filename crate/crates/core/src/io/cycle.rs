//! Synthetic drive cycles on the 20 s excitation / 4 s rest protocol.
//!
//! Excitation current is drawn from band-limited AR(1) segments standing in
//! for portions of a vehicle drive cycle. The concatenated segment stream is
//! looped and laid into the excitation windows; rest windows carry 0 A.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Statistical character of a current segment. Negative current discharges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurrentProfile {
    Urban,
    Road,
    Motorway,
}

impl CurrentProfile {
    /// (mean A, std A, lag-one correlation at 1 s).
    fn ar1(self) -> (f64, f64, f64) {
        match self {
            CurrentProfile::Urban => (-1.0, 12.0, 0.85),
            CurrentProfile::Road => (-3.0, 14.0, 0.92),
            CurrentProfile::Motorway => (-5.0, 15.0, 0.96),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration_s: u32,
    pub profile: CurrentProfile,
}

/// Layout of a synthetic excitation profile sampled at 1 Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveCycleSpec {
    pub segments: Vec<Segment>,
    pub loop_count: u32,
    pub excitation_s: u32,
    pub rest_s: u32,
    pub total_s: u32,
    /// Admittance sampling period; a multiple of `excitation_s + rest_s`.
    pub cadence_s: u32,
    pub current_bounds: (f64, f64),
}

impl Default for DriveCycleSpec {
    fn default() -> Self {
        Self {
            segments: vec![
                Segment {
                    duration_s: 600,
                    profile: CurrentProfile::Urban,
                },
                Segment {
                    duration_s: 600,
                    profile: CurrentProfile::Road,
                },
                Segment {
                    duration_s: 600,
                    profile: CurrentProfile::Motorway,
                },
            ],
            loop_count: 2,
            excitation_s: 20,
            rest_s: 4,
            total_s: 3500,
            cadence_s: 24,
            current_bounds: (-23.0, 30.0),
        }
    }
}

impl DriveCycleSpec {
    pub fn period_s(&self) -> u32 {
        self.excitation_s + self.rest_s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Configuration(m));
        let (lo, hi) = self.current_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo <= 0.0 && 0.0 <= hi && lo < hi) {
            return bad(format!("current bounds ({lo}, {hi}) must bracket 0 A"));
        }
        if self.excitation_s == 0 {
            return bad("excitation_s must be > 0".into());
        }
        if self.cadence_s == 0 || self.cadence_s % self.period_s() != 0 {
            return bad(format!(
                "cadence {} s is not a multiple of the {} s excitation/rest period",
                self.cadence_s,
                self.period_s()
            ));
        }
        if self.segments.is_empty() || self.segments.iter().any(|s| s.duration_s == 0) {
            return bad("need at least one segment of positive duration".into());
        }
        if self.loop_count == 0 {
            return bad("loop_count must be >= 1".into());
        }
        if self.total_s == 0 {
            return bad("total_s must be > 0".into());
        }
        Ok(())
    }
}

/// Current timeline on a 1 s grid, `total_s + 1` samples from t = 0.
///
/// `current[k]` holds over `[k, k + 1)`. `measure[k]` marks admittance sample
/// times, which fall at the end of rest windows.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveCycle {
    pub current: Vec<f64>,
    pub measure: Vec<bool>,
}

impl DriveCycle {
    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| k as f64)
    }

    /// Whether the interval starting at `t` lies in a rest window.
    pub fn is_rest(spec: &DriveCycleSpec, t: u32) -> bool {
        t % spec.period_s() >= spec.excitation_s
    }
}

pub fn generate_drive_cycle(spec: &DriveCycleSpec, seed: u64) -> Result<DriveCycle> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = spec.current_bounds;
    let mut stream = Vec::new();
    for seg in &spec.segments {
        let (mean, std, phi) = seg.profile.ar1();
        let innovation_std = std * (1.0 - phi * phi).sqrt();
        let mut x: f64 = mean;
        for _ in 0..seg.duration_s {
            let z: f64 = StandardNormal.sample(&mut rng);
            x = mean + phi * (x - mean) + innovation_std * z;
            stream.push(x.clamp(lo, hi));
        }
    }
    let looped: Vec<f64> = (0..spec.loop_count)
        .flat_map(|_| stream.iter().copied())
        .collect();

    let n = spec.total_s as usize + 1;
    let mut current = Vec::with_capacity(n);
    let mut measure = Vec::with_capacity(n);
    let mut cursor = 0usize;
    for t in 0..=spec.total_s {
        if DriveCycle::is_rest(spec, t) {
            current.push(0.0);
        } else {
            current.push(looped[cursor % looped.len()]);
            cursor += 1;
        }
        measure.push(t > 0 && t % spec.cadence_s == 0);
    }
    Ok(DriveCycle { current, measure })
}

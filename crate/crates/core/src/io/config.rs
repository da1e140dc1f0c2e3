//! TOML run configuration. Every section and key is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cycle::DriveCycleSpec;
use super::synth::{NoiseSpec, PlantSetup};
use crate::error::{Error, Result};
use crate::estimation::{EstimatorConfig, FilterKind};
use crate::identification::ParamBounds;
use crate::impedance::DEFAULT_FREQ_HZ;

/// Frequency grid of the `freqresp` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points_per_decade: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            f_min_hz: 1e-6,
            f_max_hz: 1.0,
            points_per_decade: 20,
        }
    }
}

/// Options of the `fit` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub free_params: Vec<crate::identification::FreeParam>,
    pub bounds: ParamBounds,
    pub max_iter: usize,
    pub xtol: f64,
    /// Cell mass (kg); when set, density is taken as mass / volume.
    pub mass_kg: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            free_params: crate::identification::FreeParam::ALL.to_vec(),
            bounds: ParamBounds::default(),
            max_iter: 2000,
            xtol: 1e-6,
            mass_kg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    /// Filter this configuration was tuned for; `estimate --filter` must agree.
    pub filter: Option<FilterKind>,
    /// Calibration frequency recorded by `calibrate` (Hz).
    pub calibration_freq_hz: f64,
    pub estimator: EstimatorConfig,
    pub cycle: DriveCycleSpec,
    pub noise: NoiseSpec,
    pub plant: PlantSetup,
    pub sweep: SweepConfig,
    pub fit: FitConfig,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            filter: None,
            calibration_freq_hz: DEFAULT_FREQ_HZ,
            estimator: EstimatorConfig::default(),
            cycle: DriveCycleSpec::default(),
            noise: NoiseSpec::default(),
            plant: PlantSetup::default(),
            sweep: SweepConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

impl AppConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: AppConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        self.cycle.validate()?;
        self.plant.coolant.validate()?;
        let s = &self.sweep;
        if !(s.f_min_hz > 0.0 && s.f_min_hz < s.f_max_hz && s.points_per_decade > 0) {
            return Err(Error::Configuration(format!("bad sweep grid {s:?}")));
        }
        if !(self.calibration_freq_hz > 0.0) {
            return Err(Error::Configuration(
                "calibration frequency must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Estimator settings for `requested`, or for the configured filter.
    ///
    /// A configuration that names a filter refuses any other.
    pub fn estimator_for(&self, requested: Option<FilterKind>) -> Result<EstimatorConfig> {
        let kind = match (self.filter, requested) {
            (Some(c), Some(r)) if c != r => {
                return Err(Error::Configuration(format!(
                    "configuration is for `{c}`, but `{r}` was requested"
                )))
            }
            (_, Some(r)) => r,
            (Some(c), None) => c,
            (None, None) => FilterKind::of(&self.estimator),
        };
        Ok(kind.apply(&self.estimator))
    }
}

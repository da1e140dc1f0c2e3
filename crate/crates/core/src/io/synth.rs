//! Synthetic telemetry: the finite-volume oracle stands in for the cell.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::cycle::DriveCycle;
use super::telemetry::TelemetryRecord;
use crate::error::{Error, Result};
use crate::impedance::AdmittancePoly;
use crate::reference::{fd_admittance, fd_simulate, FdConfig};
use crate::thermal::ThermalParams;

/// Standard deviations of the injected Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Admittance noise (Ohm^-1).
    pub sigma_adm: f64,
    /// Surface thermocouple noise (degC).
    pub sigma_temp: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            sigma_adm: 1e-4,
            sigma_temp: 0.1,
        }
    }
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            sigma_adm: 0.0,
            sigma_temp: 0.0,
        }
    }
}

/// Coolant temperature program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coolant {
    Constant {
        t_c: f64,
    },
    /// Slow sinusoidal swing around `mean_c`; `freq_hz <= 1e-3`.
    SlowRamp {
        mean_c: f64,
        amplitude_c: f64,
        freq_hz: f64,
    },
}

impl Default for Coolant {
    fn default() -> Self {
        Coolant::Constant { t_c: 8.0 }
    }
}

/// Highest frequency accepted for [`Coolant::SlowRamp`].
pub const MAX_RAMP_HZ: f64 = 1e-3;

impl Coolant {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Coolant::Constant { t_c } => t_c,
            Coolant::SlowRamp {
                mean_c,
                amplitude_c,
                freq_hz,
            } => mean_c + amplitude_c * (2.0 * PI * freq_hz * t).sin(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Coolant::Constant { t_c } if t_c.is_finite() => Ok(()),
            Coolant::SlowRamp {
                mean_c,
                amplitude_c,
                freq_hz,
            } if mean_c.is_finite()
                && amplitude_c.is_finite()
                && freq_hz > 0.0
                && freq_hz <= MAX_RAMP_HZ =>
            {
                Ok(())
            }
            other => Err(Error::Configuration(format!(
                "invalid coolant program {other:?}"
            ))),
        }
    }
}

/// Electrical surrogate, initial condition and oracle resolution of a
/// synthetic experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSetup {
    /// Open-circuit voltage (V), held constant.
    pub u_ocv: f64,
    /// Series resistance (Ohm): `V = U_ocv + I R0`.
    pub r0: f64,
    pub coolant: Coolant,
    /// Uniform initial cell temperature (degC).
    pub initial_temp: f64,
    pub fd_nodes: usize,
    pub fd_dt: f64,
}

impl Default for PlantSetup {
    fn default() -> Self {
        Self {
            u_ocv: 3.3,
            r0: 0.01,
            coolant: Coolant::default(),
            initial_temp: 8.0,
            fd_nodes: FdConfig::default().n_nodes,
            fd_dt: FdConfig::default().dt,
        }
    }
}

impl PlantSetup {
    pub fn fd_config(&self) -> FdConfig {
        FdConfig {
            n_nodes: self.fd_nodes,
            dt: self.fd_dt,
        }
    }

    pub fn voltage(&self, current: f64) -> f64 {
        self.u_ocv + current * self.r0
    }
}

/// Runs the oracle over `cycle` and packages telemetry with truth channels.
///
/// Admittance is attached at the cycle's sample instants; the surface
/// thermocouple channel is attached at every record.
pub fn synthesize_telemetry(
    cycle: &DriveCycle,
    params: &ThermalParams,
    poly: &AdmittancePoly,
    noise: NoiseSpec,
    seed: u64,
    plant: &PlantSetup,
) -> Result<Vec<TelemetryRecord>> {
    plant.coolant.validate()?;
    if !(noise.sigma_adm >= 0.0 && noise.sigma_temp >= 0.0) {
        return Err(Error::Configuration("noise levels must be >= 0".into()));
    }
    if cycle.is_empty() {
        return Err(Error::Input("empty drive cycle".into()));
    }
    let n = cycle.len();
    let voltage: Vec<f64> = cycle.current.iter().map(|&i| plant.voltage(i)).collect();
    let t_inf: Vec<f64> = (0..n).map(|k| plant.coolant.at(k as f64)).collect();
    let heat: Vec<f64> = (0..n - 1)
        .map(|k| cycle.current[k] * (voltage[k] - plant.u_ocv))
        .collect();
    let run = fd_simulate(
        params,
        &heat,
        &t_inf[..n - 1],
        1.0,
        plant.initial_temp,
        plant.fd_config(),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |s: f64| Normal::new(0.0, s).map_err(|e| Error::Configuration(e.to_string()));
    let adm_noise = normal(noise.sigma_adm)?;
    let temp_noise = normal(noise.sigma_temp)?;
    let records = run
        .fields
        .iter()
        .enumerate()
        .map(|(k, field)| {
            let mut r = TelemetryRecord::new(k as f64, cycle.current[k], voltage[k], t_inf[k]);
            r.t_core_truth = Some(field.core());
            r.t_surf_truth = Some(field.surface());
            r.t_surf_meas = Some(field.surface() + temp_noise.sample(&mut rng));
            if cycle.measure[k] {
                r.adm_real = Some(fd_admittance(field, poly) + adm_noise.sample(&mut rng));
            }
            r
        })
        .collect();
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::cycle::{generate_drive_cycle, DriveCycleSpec};

    fn short_spec() -> DriveCycleSpec {
        DriveCycleSpec {
            total_s: 480,
            ..DriveCycleSpec::default()
        }
    }

    #[test]
    fn noiseless_admittance_equals_oracle_average() {
        let p = ThermalParams::reference_26650();
        let poly = AdmittancePoly::default_calibration();
        let plant = PlantSetup::default();
        let cycle = generate_drive_cycle(&short_spec(), 1).unwrap();
        let tel =
            synthesize_telemetry(&cycle, &p, &poly, NoiseSpec::noiseless(), 0, &plant).unwrap();
        let heat: Vec<f64> = tel[..tel.len() - 1]
            .iter()
            .map(|r| r.heat(plant.u_ocv))
            .collect();
        let run = fd_simulate(
            &p,
            &heat,
            &vec![8.0; heat.len()],
            1.0,
            8.0,
            plant.fd_config(),
        )
        .unwrap();
        for (r, f) in tel.iter().zip(&run.fields) {
            if let Some(y) = r.adm_real {
                assert_eq!(y, fd_admittance(f, &poly));
            }
            assert_eq!(r.t_surf_meas, r.t_surf_truth);
        }
    }

    #[test]
    fn heat_is_resistive() {
        let plant = PlantSetup::default();
        for i in [-23.0, -4.5, 0.0, 12.0, 30.0] {
            let q = crate::thermal::heat_generation(i, plant.voltage(i), plant.u_ocv);
            assert!((q - i * i * plant.r0).abs() < 1e-12);
        }
    }

    #[test]
    fn samples_sit_at_end_of_rest() {
        let p = ThermalParams::reference_26650();
        let poly = AdmittancePoly::default_calibration();
        let cycle = generate_drive_cycle(&short_spec(), 1).unwrap();
        let tel = synthesize_telemetry(
            &cycle,
            &p,
            &poly,
            NoiseSpec::default(),
            5,
            &PlantSetup::default(),
        )
        .unwrap();
        let sampled: Vec<f64> = tel
            .iter()
            .filter(|r| r.adm_real.is_some())
            .map(|r| r.time)
            .collect();
        assert_eq!(sampled.len(), 20);
        for t in sampled {
            assert_eq!(t % 24.0, 0.0);
            let k = t as usize;
            assert!(tel[k - 4..k].iter().all(|r| r.current == 0.0));
        }
    }

    #[test]
    fn coolant_programs() {
        assert!(Coolant::SlowRamp {
            mean_c: 8.0,
            amplitude_c: 2.0,
            freq_hz: 1e-2
        }
        .validate()
        .is_err());
        let c = Coolant::SlowRamp {
            mean_c: 8.0,
            amplitude_c: 2.0,
            freq_hz: 2.5e-4,
        };
        c.validate().unwrap();
        assert!((c.at(1000.0) - 10.0).abs() < 1e-12);
    }
}

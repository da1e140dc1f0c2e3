//! Offline identification of `cp`, `kt` and `h` from measured core and
//! surface temperatures, with density fixed from mass and volume.

mod nelder_mead;

pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{validate_telemetry, TelemetryRecord};
use crate::thermal::{HeatInput, StateSpaceModel, ThermalParams, ThermalState};

/// Objective value returned for infeasible candidates.
pub const PENALTY: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreeParam {
    Cp,
    Kt,
    H,
}

impl FreeParam {
    pub const ALL: [FreeParam; 3] = [FreeParam::Cp, FreeParam::Kt, FreeParam::H];

    pub fn get(self, p: &ThermalParams) -> f64 {
        match self {
            FreeParam::Cp => p.cp(),
            FreeParam::Kt => p.kt(),
            FreeParam::H => p.h(),
        }
    }

    pub fn set(self, p: &ThermalParams, v: f64) -> Result<ThermalParams> {
        match self {
            FreeParam::Cp => p.with_cp(v),
            FreeParam::Kt => p.with_kt(v),
            FreeParam::H => p.with_h(v),
        }
    }
}

/// Positive search intervals per parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamBounds {
    pub cp: (f64, f64),
    pub kt: (f64, f64),
    pub h: (f64, f64),
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            cp: (100.0, 10_000.0),
            kt: (0.01, 10.0),
            h: (0.1, 1_000.0),
        }
    }
}

impl ParamBounds {
    pub fn of(&self, p: FreeParam) -> (f64, f64) {
        match p {
            FreeParam::Cp => self.cp,
            FreeParam::Kt => self.kt,
            FreeParam::H => self.h,
        }
    }
}

/// Dataset, free parameters and starting point of a fit.
#[derive(Debug, Clone)]
pub struct FitProblem<'a> {
    /// Records with both truth channels, read as thermocouple measurements.
    pub dataset: &'a [TelemetryRecord],
    pub free_params: Vec<FreeParam>,
    pub initial_guess: ThermalParams,
    pub bounds: ParamBounds,
    /// Open-circuit voltage for the heat computation.
    pub u_ocv: f64,
    /// Model state at the first record; by default fitted to its two
    /// thermocouple readings with a parabolic profile.
    pub initial_state: Option<ThermalState>,
    pub options: NelderMeadOptions,
}

impl<'a> FitProblem<'a> {
    pub fn new(dataset: &'a [TelemetryRecord], initial_guess: ThermalParams, u_ocv: f64) -> Self {
        Self {
            dataset,
            free_params: FreeParam::ALL.to_vec(),
            initial_guess,
            bounds: ParamBounds::default(),
            u_ocv,
            initial_state: None,
            options: NelderMeadOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        thermocouples(self.dataset)?;
        if self.free_params.is_empty() {
            return Err(Error::Configuration("no free parameters".into()));
        }
        for &fp in &self.free_params {
            let (lo, hi) = self.bounds.of(fp);
            let v = fp.get(&self.initial_guess);
            if !(lo > 0.0 && lo < hi && (lo..=hi).contains(&v)) {
                return Err(Error::Configuration(format!(
                    "{fp:?} = {v} outside bounds ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Result of [`fit_thermal_params`], persisted as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: ThermalParams,
    pub objective: f64,
    pub rmse_core: f64,
    pub rmse_surf: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn thermocouples(dataset: &[TelemetryRecord]) -> Result<(Vec<f64>, Vec<f64>)> {
    if dataset.len() < 2 {
        return Err(Error::InsufficientData("need at least two records".into()));
    }
    validate_telemetry(dataset)?;
    let dt = dataset[1].time - dataset[0].time;
    for w in dataset.windows(2) {
        if ((w[1].time - w[0].time) - dt).abs() > 1e-6 * dt {
            return Err(Error::Input("records are not evenly spaced".into()));
        }
    }
    dataset
        .iter()
        .map(|r| match (r.t_core_truth, r.t_surf_truth) {
            (Some(c), Some(s)) => Ok((c, s)),
            _ => Err(Error::InsufficientData(format!(
                "record at t = {} lacks a temperature channel",
                r.time
            ))),
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().unzip())
}

/// Open-loop PA prediction of (core, surface) at every record.
pub fn simulate_open_loop(
    params: &ThermalParams,
    dataset: &[TelemetryRecord],
    u_ocv: f64,
    x0: ThermalState,
) -> Result<Vec<(f64, f64)>> {
    if dataset.len() < 2 {
        return Err(Error::InsufficientData("need at least two records".into()));
    }
    let dt = dataset[1].time - dataset[0].time;
    let model = StateSpaceModel::continuous(params);
    let d = model.discretize(dt)?;
    let mut x = x0;
    let mut out = Vec::with_capacity(dataset.len());
    for (k, r) in dataset.iter().enumerate() {
        if k > 0 {
            let prev = &dataset[k - 1];
            x = d.step(x, HeatInput::new(prev.heat(u_ocv), prev.t_inf))?;
        }
        out.push(model.outputs(x, r.t_inf));
    }
    Ok(out)
}

fn initial_state(
    problem_x0: Option<ThermalState>,
    dataset: &[TelemetryRecord],
    r_o: f64,
) -> Result<ThermalState> {
    if let Some(x) = problem_x0 {
        return Ok(x);
    }
    let (c, s) = thermocouples(&dataset[..2.min(dataset.len())]).map(|(c, s)| (c[0], s[0]))?;
    Ok(ThermalState::from_parabolic(c, s, r_o))
}

/// `sqrt(sum (T_core,m - T_core)^2 + (T_surf,m - T_surf)^2)` over the dataset.
pub fn objective(
    params: &ThermalParams,
    dataset: &[TelemetryRecord],
    u_ocv: f64,
    x0: Option<ThermalState>,
) -> Result<f64> {
    let (core, surf) = thermocouples(dataset)?;
    let x0 = initial_state(x0, dataset, params.r_o())?;
    let sim = simulate_open_loop(params, dataset, u_ocv, x0)?;
    let ss: f64 = sim
        .iter()
        .zip(core.iter().zip(&surf))
        .map(|((mc, ms), (c, s))| (mc - c).powi(2) + (ms - s).powi(2))
        .sum();
    Ok(ss.sqrt())
}

/// Open-loop per-channel RMSE of `params` on a dataset.
pub fn open_loop_rmse(
    params: &ThermalParams,
    dataset: &[TelemetryRecord],
    u_ocv: f64,
    x0: Option<ThermalState>,
) -> Result<(f64, f64)> {
    let (core, surf) = thermocouples(dataset)?;
    let x0 = initial_state(x0, dataset, params.r_o())?;
    let sim = simulate_open_loop(params, dataset, u_ocv, x0)?;
    let n = sim.len() as f64;
    let rc = sim
        .iter()
        .zip(&core)
        .map(|((m, _), c)| (m - c).powi(2))
        .sum::<f64>()
        / n;
    let rs = sim
        .iter()
        .zip(&surf)
        .map(|((_, m), s)| (m - s).powi(2))
        .sum::<f64>()
        / n;
    Ok((rc.sqrt(), rs.sqrt()))
}

fn candidate(problem: &FitProblem<'_>, z: &[f64]) -> Option<ThermalParams> {
    let mut p = problem.initial_guess;
    for (&fp, &zi) in problem.free_params.iter().zip(z) {
        let v = zi.exp();
        let (lo, hi) = problem.bounds.of(fp);
        if !(v >= lo && v <= hi) {
            return None;
        }
        p = fp.set(&p, v).ok()?;
    }
    Some(p)
}

/// Nelder-Mead over the logarithms of the free parameters.
///
/// Infeasible candidates score [`PENALTY`]. When the iteration cap is hit the
/// best parameters so far are returned with `converged = false`.
pub fn fit_thermal_params(problem: &FitProblem<'_>) -> Result<(ThermalParams, FitReport)> {
    problem.validate()?;
    let z0: Vec<f64> = problem
        .free_params
        .iter()
        .map(|fp| fp.get(&problem.initial_guess).ln())
        .collect();
    let x0 = initial_state(
        problem.initial_state,
        problem.dataset,
        problem.initial_guess.r_o(),
    )?;
    let f = |z: &[f64]| match candidate(problem, z) {
        Some(p) => objective(&p, problem.dataset, problem.u_ocv, Some(x0)).unwrap_or(PENALTY),
        None => PENALTY,
    };
    let res = nelder_mead(f, &z0, &problem.options);
    let params = candidate(problem, &res.x)
        .ok_or_else(|| Error::Numerical("optimizer left the feasible region".into()))?;
    if !res.converged {
        warn!(
            "identification stopped after {} iterations without converging",
            res.iterations
        );
    }
    let (rmse_core, rmse_surf) = open_loop_rmse(&params, problem.dataset, problem.u_ocv, Some(x0))?;
    let report = FitReport {
        params,
        objective: res.f,
        rmse_core,
        rmse_surf,
        iterations: res.iterations,
        converged: res.converged,
    };
    Ok((params, report))
}

/// Bulk density from the cell mass and the volume in `params`.
pub fn density_from_mass(mass: f64, params: &ThermalParams) -> Result<f64> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Input(format!("mass must be > 0, got {mass}")));
    }
    let v = params.v_b();
    if !(v > 0.0) {
        return Err(Error::Input("cell volume is zero".into()));
    }
    Ok(mass / v)
}

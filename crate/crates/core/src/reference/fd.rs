//! Implicit finite-volume solver for 1D radial conduction in a cylinder with
//! uniform volumetric heating and a convective surface.
//!
//! Nodes sit on a uniform grid `r_i = i dr`, `i = 0..n-1`, with half control
//! volumes at the axis and the surface. Conduction fluxes telescope, so the
//! discrete energy balance holds to round-off every step. Time stepping is
//! backward Euler with a pre-factored tridiagonal system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::ThermalParams;

/// Temperatures on the radial grid at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub nodes: Vec<f64>,
    pub temps: Vec<f64>,
    pub time: f64,
}

impl RadialField {
    /// Uniform grid on `[0, r_o]` with every node at `temp`.
    pub fn uniform(n_nodes: usize, r_o: f64, temp: f64, time: f64) -> Self {
        let nodes = grid(n_nodes, r_o);
        Self {
            temps: vec![temp; nodes.len()],
            nodes,
            time,
        }
    }

    /// Grid with temperatures given by `f(r)`.
    pub fn from_fn(n_nodes: usize, r_o: f64, time: f64, f: impl Fn(f64) -> f64) -> Self {
        let nodes = grid(n_nodes, r_o);
        Self {
            temps: nodes.iter().map(|&r| f(r)).collect(),
            nodes,
            time,
        }
    }

    /// Checks the grid and value invariants.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() < 2 || self.nodes.len() != self.temps.len() {
            return Err(Error::Input(
                "field needs >= 2 nodes and one temperature per node".into(),
            ));
        }
        if self.nodes[0] != 0.0 {
            return Err(Error::Input("first node must be at r = 0".into()));
        }
        if self.nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("nodes must be strictly increasing".into()));
        }
        if self.temps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Input("non-finite temperature".into()));
        }
        Ok(())
    }

    pub fn r_o(&self) -> f64 {
        *self.nodes.last().expect("non-empty grid")
    }

    pub fn core(&self) -> f64 {
        self.temps[0]
    }

    pub fn surface(&self) -> f64 {
        *self.temps.last().expect("non-empty grid")
    }

    /// Trapezoidal `(2/r_o^2) \int_0^{r_o} r g(T(r)) dr`.
    pub fn radial_average(&self, g: impl Fn(f64) -> f64) -> f64 {
        let r_o = self.r_o();
        let mut acc = 0.0;
        for i in 1..self.nodes.len() {
            let (r0, r1) = (self.nodes[i - 1], self.nodes[i]);
            acc += 0.5 * (r1 - r0) * (r0 * g(self.temps[i - 1]) + r1 * g(self.temps[i]));
        }
        2.0 * acc / (r_o * r_o)
    }

    /// Volume-averaged temperature.
    pub fn volume_average(&self) -> f64 {
        self.radial_average(|t| t)
    }

    /// Volume-averaged radial gradient, `(2/r_o) T_s - (2/r_o^2) \int T dr`.
    pub fn gradient_average(&self) -> f64 {
        let r_o = self.r_o();
        let mut integral = 0.0;
        for i in 1..self.nodes.len() {
            integral +=
                0.5 * (self.nodes[i] - self.nodes[i - 1]) * (self.temps[i] + self.temps[i - 1]);
        }
        2.0 * self.surface() / r_o - 2.0 * integral / (r_o * r_o)
    }
}

fn grid(n_nodes: usize, r_o: f64) -> Vec<f64> {
    let dr = r_o / (n_nodes - 1) as f64;
    (0..n_nodes)
        .map(|i| if i + 1 == n_nodes { r_o } else { i as f64 * dr })
        .collect()
}

/// Grid size and time step of the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub n_nodes: usize,
    pub dt: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            n_nodes: 201,
            dt: 0.1,
        }
    }
}

/// Minimum node count accepted by the oracle.
pub const MIN_NODES: usize = 51;

/// Energy accounting over one or more steps (J).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyBalance {
    pub stored_change: f64,
    pub heat_in: f64,
    pub heat_out: f64,
    /// Sum of |heat_in| + |heat_out| over the steps.
    pub throughput: f64,
}

impl EnergyBalance {
    pub fn residual(&self) -> f64 {
        self.stored_change - (self.heat_in - self.heat_out)
    }

    /// Residual relative to the energy that passed through the cell.
    pub fn relative_residual(&self) -> f64 {
        if self.throughput == 0.0 {
            self.residual().abs()
        } else {
            self.residual().abs() / self.throughput
        }
    }

    pub fn accumulate(&mut self, other: &EnergyBalance) {
        self.stored_change += other.stored_change;
        self.heat_in += other.heat_in;
        self.heat_out += other.heat_out;
        self.throughput += other.throughput;
    }
}

/// Pre-factored backward-Euler stepper for a fixed grid, step and `h`.
#[derive(Debug, Clone)]
pub struct FdSolver {
    params: ThermalParams,
    dt: f64,
    nodes: Vec<f64>,
    capacity: Vec<f64>,
    conductance: Vec<f64>,
    source_fraction: Vec<f64>,
    surface_conductance: f64,
    lower: Vec<f64>,
    upper_mod: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl FdSolver {
    pub fn new(params: &ThermalParams, cfg: FdConfig) -> Result<Self> {
        if cfg.n_nodes < MIN_NODES {
            return Err(Error::Configuration(format!(
                "n_nodes = {} below minimum {MIN_NODES}",
                cfg.n_nodes
            )));
        }
        if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
            return Err(Error::Configuration(format!(
                "dt must be > 0, got {}",
                cfg.dt
            )));
        }
        let n = cfg.n_nodes;
        let r_o = params.r_o();
        let len = params.length();
        let dr = r_o / (n - 1) as f64;
        let nodes = grid(n, r_o);
        let pi_l = std::f64::consts::PI * len;
        let face = |i: usize| (i as f64 + 0.5) * dr; // between node i and i+1
        let mut volume = vec![0.0; n];
        for (i, v) in volume.iter_mut().enumerate() {
            let inner = if i == 0 { 0.0 } else { face(i - 1) };
            let outer = if i + 1 == n { r_o } else { face(i) };
            *v = pi_l * (outer * outer - inner * inner);
        }
        let total: f64 = volume.iter().sum();
        let rc = params.rho() * params.cp();
        let capacity: Vec<f64> = volume.iter().map(|v| rc * v).collect();
        let source_fraction: Vec<f64> = volume.iter().map(|v| v / total).collect();
        let conductance: Vec<f64> = (0..n - 1)
            .map(|i| params.kt() * 2.0 * pi_l * face(i) / dr)
            .collect();
        let surface_conductance = params.h() * params.side_area();

        // Tridiagonal matrix of (C/dt + K) and its Thomas factorization.
        let mut diag = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            diag[i] = capacity[i] / cfg.dt;
            if i > 0 {
                diag[i] += conductance[i - 1];
                lower[i] = -conductance[i - 1];
            }
            if i + 1 < n {
                diag[i] += conductance[i];
                upper[i] = -conductance[i];
            }
        }
        diag[n - 1] += surface_conductance;
        let mut upper_mod = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        for i in 0..n {
            let pivot = diag[i]
                - if i > 0 {
                    lower[i] * upper_mod[i - 1]
                } else {
                    0.0
                };
            inv_pivot[i] = 1.0 / pivot;
            upper_mod[i] = upper[i] * inv_pivot[i];
        }
        Ok(Self {
            params: *params,
            dt: cfg.dt,
            nodes,
            capacity,
            conductance,
            source_fraction,
            surface_conductance,
            lower,
            upper_mod,
            inv_pivot,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &ThermalParams {
        &self.params
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Stored thermal energy relative to 0 degC (J).
    pub fn stored_energy(&self, temps: &[f64]) -> f64 {
        self.capacity.iter().zip(temps).map(|(c, t)| c * t).sum()
    }

    /// Control-volume weighted average temperature.
    pub fn volume_average(&self, temps: &[f64]) -> f64 {
        self.stored_energy(temps) / self.capacity.iter().sum::<f64>()
    }

    /// Advance `temps` by one step with heat `q` (W) and coolant `t_inf`
    /// both held at their end-of-step values.
    pub fn step(&self, temps: &mut [f64], q: f64, t_inf: f64) -> EnergyBalance {
        let n = temps.len();
        debug_assert_eq!(n, self.capacity.len());
        let before = temps.to_vec();
        // forward sweep writes the modified rhs into temps
        for i in 0..n {
            let mut rhs = self.capacity[i] / self.dt * temps[i] + self.source_fraction[i] * q;
            if i + 1 == n {
                rhs += self.surface_conductance * t_inf;
            }
            if i > 0 {
                rhs -= self.lower[i] * temps[i - 1];
            }
            temps[i] = rhs * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            temps[i] -= self.upper_mod[i] * temps[i + 1];
        }
        let heat_in = q * self.dt;
        let heat_out = self.surface_conductance * (temps[n - 1] - t_inf) * self.dt;
        EnergyBalance {
            // summed per node to avoid cancelling two large totals
            stored_change: self
                .capacity
                .iter()
                .zip(temps.iter().zip(&before))
                .map(|(c, (new, old))| c * (new - old))
                .sum(),
            heat_in,
            heat_out,
            throughput: heat_in.abs() + heat_out.abs(),
        }
    }

    /// Conductance between node `i` and `i + 1` (W/K).
    pub fn conductance(&self, i: usize) -> f64 {
        self.conductance[i]
    }
}

/// Result of an oracle run.
#[derive(Debug, Clone)]
pub struct FdRun {
    /// Field at every sample instant, `q_series.len() + 1` entries.
    pub fields: Vec<RadialField>,
    pub energy: EnergyBalance,
    /// Largest single-step energy residual relative to the run's throughput.
    pub max_step_residual: f64,
}

/// Simulates the cell from a uniform initial temperature.
///
/// `q_series[k]` and `t_inf_series[k]` hold over `[k, k+1) * sample_dt`;
/// `sample_dt` must be an integer multiple of `cfg.dt`.
pub fn fd_simulate(
    params: &ThermalParams,
    q_series: &[f64],
    t_inf_series: &[f64],
    sample_dt: f64,
    initial_temp: f64,
    cfg: FdConfig,
) -> Result<FdRun> {
    let initial = RadialField::uniform(cfg.n_nodes, params.r_o(), initial_temp, 0.0);
    fd_simulate_from(params, q_series, t_inf_series, sample_dt, initial, cfg)
}

/// Like [`fd_simulate`] with an explicit initial field on the solver grid.
pub fn fd_simulate_from(
    params: &ThermalParams,
    q_series: &[f64],
    t_inf_series: &[f64],
    sample_dt: f64,
    initial: RadialField,
    cfg: FdConfig,
) -> Result<FdRun> {
    if q_series.len() != t_inf_series.len() {
        return Err(Error::Input(format!(
            "heat series has {} samples, coolant series {}",
            q_series.len(),
            t_inf_series.len()
        )));
    }
    let ratio = sample_dt / cfg.dt;
    let substeps = ratio.round();
    if !(sample_dt > 0.0) || substeps < 1.0 || (ratio - substeps).abs() > 1e-9 * ratio {
        return Err(Error::Configuration(format!(
            "sample interval {sample_dt} is not an integer multiple of dt {}",
            cfg.dt
        )));
    }
    let substeps = substeps as usize;
    let solver = FdSolver::new(params, cfg)?;
    if initial.nodes.len() != cfg.n_nodes {
        return Err(Error::Configuration(
            "initial field is not on the solver grid".into(),
        ));
    }
    initial.validate()?;

    let mut fields = Vec::with_capacity(q_series.len() + 1);
    let mut temps = initial.temps.clone();
    let t0 = initial.time;
    fields.push(initial);
    let mut energy = EnergyBalance::default();
    let mut max_step_residual: f64 = 0.0;
    for (k, (&q, &t_inf)) in q_series.iter().zip(t_inf_series).enumerate() {
        for _ in 0..substeps {
            let e = solver.step(&mut temps, q, t_inf);
            max_step_residual = max_step_residual.max(e.residual().abs());
            energy.accumulate(&e);
        }
        fields.push(RadialField {
            nodes: solver.nodes.clone(),
            temps: temps.clone(),
            time: t0 + (k + 1) as f64 * sample_dt,
        });
    }
    if energy.throughput > 0.0 {
        max_step_residual /= energy.throughput;
    }
    Ok(FdRun {
        fields,
        energy,
        max_step_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_cell() -> ThermalParams {
        ThermalParams::reference_26650()
    }

    #[test]
    fn rejects_coarse_grid_and_bad_step() {
        let p = reference_cell();
        assert!(FdSolver::new(
            &p,
            FdConfig {
                n_nodes: 50,
                dt: 0.1
            }
        )
        .is_err());
        assert!(FdSolver::new(
            &p,
            FdConfig {
                n_nodes: 51,
                dt: 0.0
            }
        )
        .is_err());
        let err = fd_simulate(
            &p,
            &[1.0],
            &[8.0],
            0.25,
            8.0,
            FdConfig {
                n_nodes: 51,
                dt: 0.1,
            },
        );
        assert!(matches!(err, Err(Error::Configuration(_))));
    }

    #[test]
    fn equilibrium_stays_constant() {
        let p = reference_cell();
        let run = fd_simulate(&p, &[0.0; 100], &[8.0; 100], 1.0, 8.0, FdConfig::default()).unwrap();
        for f in &run.fields {
            assert!(f.temps.iter().all(|&t| (t - 8.0).abs() < 1e-12));
        }
    }

    #[test]
    fn energy_is_conserved_per_step() {
        let p = reference_cell();
        let q: Vec<f64> = (0..500)
            .map(|k| 3.0 * ((k as f64) * 0.05).sin().abs())
            .collect();
        let run = fd_simulate(&p, &q, &vec![8.0; 500], 1.0, 8.0, FdConfig::default()).unwrap();
        assert!(run.max_step_residual < 1e-6, "{}", run.max_step_residual);
        assert!(run.energy.relative_residual() < 1e-9);
    }

    #[test]
    fn grid_and_averages() {
        let f = RadialField::from_fn(101, 0.013, 0.0, |r| 5.0 + 2.0 * r / 0.013);
        f.validate().unwrap();
        assert_eq!(f.r_o(), 0.013);
        // linear profile: mean = 5 + 2 * 2/3, gradient = 2 / r_o
        assert!((f.volume_average() - (5.0 + 4.0 / 3.0)).abs() < 1e-4);
        assert!((f.gradient_average() - 2.0 / 0.013).abs() < 1e-2);
    }
}

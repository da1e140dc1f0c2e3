use serde::Serialize;

use super::config::{EstimatorConfig, MeasurementKind};
use super::filter::{EstimatorState, Filter};
use crate::error::{Error, Result};
use crate::impedance::AdmittancePoly;
use crate::io::{validate_telemetry, TelemetryRecord};
use crate::par::Exec;
use crate::thermal::{HeatInput, ThermalParams, ThermalState};

/// Estimate after processing one telemetry record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub time: f64,
    pub x_hat: ThermalState,
    pub h_hat: f64,
    pub t_core: f64,
    pub t_surf: f64,
    /// Present only at records that carried a measurement.
    pub innovation: Option<f64>,
    /// Diagonal of the state covariance and the parameter variance.
    pub var_t_bar: f64,
    pub var_gamma: f64,
    pub var_h: f64,
}

/// Per-record estimates of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimateTrace {
    pub points: Vec<TracePoint>,
}

/// Row of the trace CSV.
#[derive(Serialize)]
pub(crate) struct TraceRow {
    pub time_s: f64,
    pub tbar_est: f64,
    pub gamma_est: f64,
    pub h_est: f64,
    pub tcore_est: f64,
    pub tsurf_est: f64,
    pub tcore_truth: Option<f64>,
    pub tsurf_truth: Option<f64>,
    pub innovation: Option<f64>,
}

impl EstimateTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&TracePoint> {
        self.points.last()
    }

    pub(crate) fn rows<'a>(
        &'a self,
        truth: &'a [TelemetryRecord],
    ) -> impl Iterator<Item = TraceRow> + 'a {
        self.points.iter().enumerate().map(move |(i, p)| TraceRow {
            time_s: p.time,
            tbar_est: p.x_hat.t_bar,
            gamma_est: p.x_hat.gamma_bar,
            h_est: p.h_hat,
            tcore_est: p.t_core,
            tsurf_est: p.t_surf,
            tcore_truth: truth.get(i).and_then(|r| r.t_core_truth),
            tsurf_truth: truth.get(i).and_then(|r| r.t_surf_truth),
            innovation: p.innovation,
        })
    }
}

fn measurement(rec: &TelemetryRecord, kind: MeasurementKind) -> Option<f64> {
    match kind {
        MeasurementKind::Admittance => rec.adm_real,
        MeasurementKind::SurfaceTemp => rec.t_surf_meas,
    }
}

fn point(
    filter: &Filter,
    est: &EstimatorState,
    rec: &TelemetryRecord,
    innovation: Option<f64>,
) -> TracePoint {
    let (t_core, t_surf) = filter.outputs(est, rec.t_inf);
    TracePoint {
        time: rec.time,
        x_hat: est.x_hat,
        h_hat: est.h_hat,
        t_core,
        t_surf,
        innovation,
        var_t_bar: est.p_x[(0, 0)],
        var_gamma: est.p_x[(1, 1)],
        var_h: est.p_h,
    }
}

fn check_cadence(telemetry: &[TelemetryRecord], dt: f64) -> Result<()> {
    validate_telemetry(telemetry)?;
    for w in telemetry.windows(2) {
        let step = w[1].time - w[0].time;
        if (step - dt).abs() > 1e-6 * dt {
            return Err(Error::Input(format!(
                "record at t = {} is {step} s after its predecessor, filter step is {dt} s",
                w[1].time
            )));
        }
    }
    Ok(())
}

fn run(
    telemetry: &[TelemetryRecord],
    cfg: &EstimatorConfig,
    params: &ThermalParams,
    poly: Option<&AdmittancePoly>,
    u_ocv: f64,
    closed_loop: bool,
) -> Result<EstimateTrace> {
    check_cadence(telemetry, cfg.dt)?;
    let mut filter = Filter::new(cfg.clone(), *params, poly.copied())?;
    let mut est = filter.initial_state();
    let mut points = Vec::with_capacity(telemetry.len());
    for (i, rec) in telemetry.iter().enumerate() {
        if i > 0 {
            let prev = &telemetry[i - 1];
            est = filter.time_update(&est, HeatInput::new(prev.heat(u_ocv), prev.t_inf))?;
        }
        let mut innovation = None;
        if closed_loop {
            if let Some(y) = measurement(rec, cfg.measurement_kind) {
                let c = filter.measurement_update(&est, y, rec.t_inf)?;
                est = c.state;
                innovation = Some(c.innovation);
            }
        }
        points.push(point(&filter, &est, rec, innovation));
    }
    Ok(EstimateTrace { points })
}

/// Runs the configured filter over a telemetry sequence sampled every `cfg.dt`.
///
/// Heat for the interval after each record is `I (V - u_ocv)`. Measurement
/// updates happen only at records carrying the configured channel.
pub fn run_estimator(
    telemetry: &[TelemetryRecord],
    cfg: &EstimatorConfig,
    params: &ThermalParams,
    poly: Option<&AdmittancePoly>,
    u_ocv: f64,
) -> Result<EstimateTrace> {
    run(telemetry, cfg, params, poly, u_ocv, true)
}

/// Same recursion with every measurement ignored.
pub fn run_open_loop(
    telemetry: &[TelemetryRecord],
    cfg: &EstimatorConfig,
    params: &ThermalParams,
    u_ocv: f64,
) -> Result<EstimateTrace> {
    let cfg = EstimatorConfig {
        measurement_kind: MeasurementKind::SurfaceTemp,
        dual: false,
        ..cfg.clone()
    };
    run(telemetry, &cfg, params, None, u_ocv, false)
}

/// One independent estimator run for [`run_batch`].
#[derive(Debug, Clone)]
pub struct BatchJob<'a> {
    pub telemetry: &'a [TelemetryRecord],
    pub cfg: EstimatorConfig,
    pub params: ThermalParams,
    pub poly: Option<AdmittancePoly>,
    pub u_ocv: f64,
}

/// Runs independent estimators, in parallel under [`Exec::Parallel`].
pub fn run_batch(jobs: &[BatchJob<'_>], exec: Exec) -> Vec<Result<EstimateTrace>> {
    exec.map(jobs, |j| {
        run_estimator(j.telemetry, &j.cfg, &j.params, j.poly.as_ref(), j.u_ocv)
    })
}

/// Which temperature an error metric refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Core,
    Surface,
}

/// RMS of `est - truth` over samples with `t_start < t <= t_end`.
pub fn rmse_series(times: &[f64], est: &[f64], truth: &[f64], window: (f64, f64)) -> Result<f64> {
    if times.len() != est.len() || times.len() != truth.len() {
        return Err(Error::Input("series lengths differ".into()));
    }
    let (sum, n) = times
        .iter()
        .zip(est.iter().zip(truth))
        .filter(|(t, _)| **t > window.0 && **t <= window.1)
        .fold((0.0, 0usize), |(s, n), (_, (e, y))| {
            (s + (e - y) * (e - y), n + 1)
        });
    if n == 0 {
        return Err(Error::Input(format!(
            "no samples in window ({}, {}]",
            window.0, window.1
        )));
    }
    Ok((sum / n as f64).sqrt())
}

/// Windowed RMSE of a trace against the truth channels of its telemetry.
pub fn rmse(
    trace: &EstimateTrace,
    truth: &[TelemetryRecord],
    channel: Channel,
    window: (f64, f64),
) -> Result<f64> {
    if trace.len() != truth.len() {
        return Err(Error::Input(format!(
            "trace has {} points, truth has {} records",
            trace.len(),
            truth.len()
        )));
    }
    let mut times = Vec::new();
    let mut est = Vec::new();
    let mut tru = Vec::new();
    for (p, r) in trace.points.iter().zip(truth) {
        if p.time != r.time {
            return Err(Error::Input(format!(
                "time mismatch {} vs {}",
                p.time, r.time
            )));
        }
        let (e, t) = match channel {
            Channel::Core => (p.t_core, r.t_core_truth),
            Channel::Surface => (p.t_surf, r.t_surf_truth),
        };
        if let Some(t) = t {
            times.push(p.time);
            est.push(e);
            tru.push(t);
        }
    }
    rmse_series(&times, &est, &tru, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal::{core_temperature, surface_temperature, StateSpaceModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rmse_examples() {
        let t: Vec<f64> = (0..10).map(f64::from).collect();
        let a: Vec<f64> = t.iter().map(|x| x.sin()).collect();
        assert_eq!(rmse_series(&t, &a, &a, (-1.0, 10.0)).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 0.7).collect();
        assert!((rmse_series(&t, &b, &a, (-1.0, 10.0)).unwrap() - 0.7).abs() < 1e-12);
        assert!(rmse_series(&t, &a, &a, (20.0, 30.0)).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c: Vec<f64> = t.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        // window (2, 6] keeps t = 3, 4, 5, 6
        let brute = ((3..=6).map(|i| (c[i] - a[i]).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert!((rmse_series(&t, &c, &a, (2.0, 6.0)).unwrap() - brute).abs() < 1e-15);
    }

    /// Telemetry generated by the PA model itself, surface channel noiseless.
    fn pa_telemetry(n: usize, x0: ThermalState) -> Vec<TelemetryRecord> {
        let p = ThermalParams::reference_26650();
        let d = StateSpaceModel::continuous(&p).discretize(1.0).unwrap();
        let mut x = x0;
        let mut out = Vec::new();
        for k in 0..n {
            let i = 15.0 * ((k as f64) * 0.07).sin();
            let mut r = TelemetryRecord::new(k as f64, i, 3.3 + 0.01 * i, 8.0);
            r.t_core_truth = Some(core_temperature(x, 8.0, &p));
            r.t_surf_truth = Some(surface_temperature(x, 8.0, &p));
            r.t_surf_meas = r.t_surf_truth;
            r.adm_real = (k % 24 == 0 && k > 0).then(|| {
                crate::impedance::measurement_fn(
                    &AdmittancePoly::default_calibration(),
                    x,
                    p.h(),
                    8.0,
                    &p,
                )
            });
            out.push(r);
            x = d.step(x, HeatInput::new(r.heat(3.3), 8.0)).unwrap();
        }
        out
    }

    #[test]
    fn consistent_model_reproduces_truth() {
        let x0 = ThermalState::uniform(8.0);
        let tel = pa_telemetry(600, x0);
        let cfg = EstimatorConfig {
            x0,
            ..EstimatorConfig::default()
        };
        let p = ThermalParams::reference_26650();
        let poly = AdmittancePoly::default_calibration();
        let tr = run_estimator(&tel, &cfg, &p, Some(&poly), 3.3).unwrap();
        for (pt, r) in tr.points.iter().zip(&tel) {
            assert!((pt.t_core - r.t_core_truth.unwrap()).abs() < 1e-8);
            assert!((pt.t_surf - r.t_surf_truth.unwrap()).abs() < 1e-8);
            if let Some(e) = pt.innovation {
                assert!(e.abs() < 1e-12);
            }
        }
        assert!(rmse(&tr, &tel, Channel::Core, (0.0, 600.0)).unwrap() < 1e-8);
    }

    #[test]
    fn open_loop_ignores_measurements() {
        let tel = pa_telemetry(100, ThermalState::uniform(8.0));
        let p = ThermalParams::reference_26650();
        let tr = run_open_loop(&tel, &EstimatorConfig::default(), &p, 3.3).unwrap();
        assert!(tr.points.iter().all(|q| q.innovation.is_none()));
        assert_eq!(tr.points[0].x_hat.t_bar, 25.0);
    }

    #[test]
    fn rejects_irregular_or_shuffled_time() {
        let mut tel = pa_telemetry(50, ThermalState::uniform(8.0));
        let p = ThermalParams::reference_26650();
        let poly = AdmittancePoly::default_calibration();
        let cfg = EstimatorConfig::default();
        tel.swap(3, 4);
        assert!(matches!(
            run_estimator(&tel, &cfg, &p, Some(&poly), 3.3),
            Err(Error::Input(_))
        ));
        let mut tel = pa_telemetry(50, ThermalState::uniform(8.0));
        tel.remove(10);
        assert!(matches!(
            run_estimator(&tel, &cfg, &p, Some(&poly), 3.3),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn batch_is_order_preserving_and_policy_independent() {
        let tel = pa_telemetry(300, ThermalState::uniform(8.0));
        let p = ThermalParams::reference_26650();
        let jobs: Vec<BatchJob> = [10.0, 20.0, 30.0]
            .iter()
            .map(|&t0| BatchJob {
                telemetry: &tel,
                cfg: EstimatorConfig {
                    x0: ThermalState::uniform(t0),
                    ..EstimatorConfig::default()
                },
                params: p,
                poly: Some(AdmittancePoly::default_calibration()),
                u_ocv: 3.3,
            })
            .collect();
        let seq = run_batch(&jobs, Exec::Sequential);
        let par = run_batch(&jobs, Exec::Parallel);
        for (a, b) in seq.iter().zip(&par) {
            assert_eq!(a.as_ref().unwrap(), b.as_ref().unwrap());
        }
        assert_eq!(seq[0].as_ref().unwrap().points[0].x_hat.t_bar, 10.0);
    }
}

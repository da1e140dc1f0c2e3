//! Predict/correct recursion shared by the EKF, DEKF, KF and DKF.
//!
//! The state filter runs on `x = [T_bar, gamma_bar]` with the ZOH model
//! rebuilt at the a-priori `h`. The dual variants add a scalar random-walk
//! filter on `h`, updated after the state with the residual evaluated at the
//! a-posteriori state.

use nalgebra::{Matrix2, RowVector2, Vector2};

use super::config::{EstimatorConfig, MeasurementKind, ParamJacobian};
use crate::error::{Error, Result};
use crate::impedance::{
    measurement_fn, measurement_jacobian_h, measurement_jacobian_state, AdmittancePoly,
};
use crate::thermal::{
    HeatInput, StateSpaceModel, SurfaceCoefficients, ThermalParams, ThermalState,
};

/// Lower bound on the estimated convection coefficient (W m^-2 K^-1).
pub const H_FLOOR: f64 = 0.1;

/// Posterior (or prior, between the two halves of a step) of a filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorState {
    pub x_hat: ThermalState,
    pub p_x: Matrix2<f64>,
    pub h_hat: f64,
    pub p_h: f64,
    /// Number of time updates applied.
    pub k: u64,
    /// Sensitivity of `x_hat` to `h`, carried for [`ParamJacobian::Total`].
    pub dx_dh: Vector2<f64>,
}

/// Result of a measurement update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correction {
    pub state: EstimatorState,
    /// `y - f(x_prior, h_prior)`.
    pub innovation: f64,
    /// Innovation variance of the state filter.
    pub innovation_var: f64,
}

/// Discrete model and, when needed, its derivative with respect to `h`.
#[derive(Debug, Clone)]
struct Discrete {
    h: f64,
    model: StateSpaceModel,
    d_model: Option<(Matrix2<f64>, Matrix2<f64>)>,
}

/// An estimator bound to a configuration, parameters and calibration.
#[derive(Debug, Clone)]
pub struct Filter {
    cfg: EstimatorConfig,
    params: ThermalParams,
    poly: Option<AdmittancePoly>,
    cache: Option<Discrete>,
}

fn symmetrize(p: Matrix2<f64>) -> Matrix2<f64> {
    (p + p.transpose()) * 0.5
}

impl Filter {
    /// `poly` is required for admittance measurements. The convection
    /// coefficient in `params` is ignored in favour of the running estimate.
    pub fn new(
        cfg: EstimatorConfig,
        params: ThermalParams,
        poly: Option<AdmittancePoly>,
    ) -> Result<Self> {
        cfg.validate()?;
        if cfg.measurement_kind == MeasurementKind::Admittance && poly.is_none() {
            return Err(Error::Configuration(
                "admittance measurements need a calibration polynomial".into(),
            ));
        }
        Ok(Self {
            cfg,
            params,
            poly,
            cache: None,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ThermalParams {
        &self.params
    }

    pub fn initial_state(&self) -> EstimatorState {
        EstimatorState {
            x_hat: self.cfg.x0,
            p_x: self.cfg.p0_x_matrix(),
            h_hat: self.cfg.h0,
            p_h: if self.cfg.dual { self.cfg.p0_h } else { 0.0 },
            k: 0,
            dx_dh: Vector2::zeros(),
        }
    }

    fn needs_sensitivity(&self) -> bool {
        self.cfg.dual && self.cfg.param_jacobian == ParamJacobian::Total
    }

    fn discrete(&mut self, h: f64) -> Result<&Discrete> {
        let stale = self.cache.as_ref().is_none_or(|c| c.h != h);
        if stale {
            let build = |h: f64| -> Result<StateSpaceModel> {
                StateSpaceModel::continuous(&self.params.with_h(h)?).discretize(self.cfg.dt)
            };
            let model = build(h)?;
            let d_model = if self.needs_sensitivity() {
                let dh = 1e-5 * h;
                let (up, down) = (build(h + dh)?, build(h - dh)?);
                Some(((up.a - down.a) / (2.0 * dh), (up.b - down.b) / (2.0 * dh)))
            } else {
                None
            };
            self.cache = Some(Discrete { h, model, d_model });
        }
        Ok(self.cache.as_ref().expect("cache filled above"))
    }

    /// Propagates mean and covariance over one step with input `u_{k-1}`.
    pub fn time_update(
        &mut self,
        est: &EstimatorState,
        input: HeatInput,
    ) -> Result<EstimatorState> {
        let mut next = *est;
        if self.cfg.dual {
            next.p_h = est.p_h + self.cfg.r_e();
        }
        let r_v = self.cfg.r_v();
        let d = self.discrete(est.h_hat)?;
        let x = est.x_hat.to_vector();
        let u = input.to_vector();
        let a = d.model.a;
        next.x_hat = ThermalState::from_vector(a * x + d.model.b * u);
        next.p_x = symmetrize(a * est.p_x * a.transpose() + r_v);
        if let Some((da, db)) = d.d_model {
            next.dx_dh = a * est.dx_dh + da * x + db * u;
        }
        next.k += 1;
        if !next.x_hat.is_finite() {
            return Err(Error::Numerical(format!(
                "state diverged at step {}",
                next.k
            )));
        }
        Ok(next)
    }

    /// Predicted measurement, its state Jacobian and its direct `h` sensitivity.
    pub fn observe(&self, x: ThermalState, h: f64, t_inf: f64) -> (f64, RowVector2<f64>, f64) {
        match self.cfg.measurement_kind {
            MeasurementKind::Admittance => {
                let poly = self.poly.as_ref().expect("checked in Filter::new");
                let f = measurement_fn(poly, x, h, t_inf, &self.params);
                let (j0, j1) = measurement_jacobian_state(poly, x, h, t_inf, &self.params);
                let jh = measurement_jacobian_h(poly, x, h, t_inf, &self.params);
                (f, RowVector2::new(j0, j1), jh)
            }
            MeasurementKind::SurfaceTemp => {
                let (kt, r_o) = (self.params.kt(), self.params.r_o());
                let sc = SurfaceCoefficients::new(kt, h, r_o);
                let jh = SurfaceCoefficients::d_dh(kt, h, r_o, x, t_inf);
                (sc.eval(x, t_inf), RowVector2::new(sc.c_t, sc.c_g), jh)
            }
        }
    }

    /// State update with `h` at its prior, then (dual only) the parameter
    /// update using the updated state.
    pub fn measurement_update(
        &self,
        est: &EstimatorState,
        y: f64,
        t_inf: f64,
    ) -> Result<Correction> {
        if !y.is_finite() {
            return Err(Error::Input(format!("non-finite measurement {y}")));
        }
        let r_n = self.cfg.r_n();
        let h_prior = est.h_hat;
        let (f_prior, hx, f_h_prior) = self.observe(est.x_hat, h_prior, t_inf);
        let innovation = y - f_prior;
        let s = (hx * est.p_x * hx.transpose())[(0, 0)] + r_n;
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Numerical(format!(
                "innovation variance {s} at step {} (x = {:?}, h = {h_prior})",
                est.k, est.x_hat
            )));
        }
        let x_prior = est.x_hat.to_vector();
        let mut gain: Vector2<f64> = est.p_x * hx.transpose() / s;
        let mut x_post = x_prior + gain * innovation;
        let mut h_lin = hx;
        for _ in 1..self.cfg.state_iterations {
            // Gauss-Newton step on the MAP objective, relinearized at the iterate
            let (f_i, h_i, _) = self.observe(ThermalState::from_vector(x_post), h_prior, t_inf);
            let s_i = (h_i * est.p_x * h_i.transpose())[(0, 0)] + r_n;
            let k_i: Vector2<f64> = est.p_x * h_i.transpose() / s_i;
            let x_next = x_prior + k_i * (y - f_i - (h_i * (x_prior - x_post))[(0, 0)]);
            let step = (x_next - x_post).amax();
            x_post = x_next;
            gain = k_i;
            h_lin = h_i;
            if step <= 1e-12 * (1.0 + x_post.amax()) {
                break;
            }
        }
        let i_kh = Matrix2::identity() - gain * h_lin;
        let mut next = *est;
        next.x_hat = ThermalState::from_vector(x_post);
        next.p_x = symmetrize(i_kh * est.p_x * i_kh.transpose() + gain * gain.transpose() * r_n);

        if self.cfg.dual {
            let (f_post, hx_post, f_h_post) = self.observe(next.x_hat, h_prior, t_inf);
            let h_jac = match self.cfg.param_jacobian {
                ParamJacobian::Partial => f_h_post,
                ParamJacobian::Total => {
                    // d x_post / dh through both the prior and the gain-weighted innovation
                    let dx_post = i_kh * est.dx_dh - gain * f_h_prior;
                    next.dx_dh = dx_post;
                    f_h_post + (hx_post * dx_post)[(0, 0)]
                }
            };
            let s_h = h_jac * est.p_h * h_jac + r_n;
            if !(s_h.is_finite() && s_h > 0.0) {
                return Err(Error::Numerical(format!(
                    "parameter innovation variance {s_h} at step {}",
                    est.k
                )));
            }
            let k_h = est.p_h * h_jac / s_h;
            let one_kh = 1.0 - k_h * h_jac;
            next.h_hat = (h_prior + k_h * (y - f_post)).max(H_FLOOR);
            next.p_h = one_kh * one_kh * est.p_h + k_h * k_h * r_n;
        }
        if !next.x_hat.is_finite() || !next.h_hat.is_finite() {
            return Err(Error::Numerical(format!(
                "update diverged at step {}",
                est.k
            )));
        }
        Ok(Correction {
            state: next,
            innovation,
            innovation_var: s,
        })
    }

    /// Core and surface temperature implied by an estimate.
    pub fn outputs(&self, est: &EstimatorState, t_inf: f64) -> (f64, f64) {
        let sc = SurfaceCoefficients::new(self.params.kt(), est.h_hat, self.params.r_o());
        let ts = sc.eval(est.x_hat, t_inf);
        let (c0, _, _) = crate::thermal::profile_coefficients(est.x_hat, ts, self.params.r_o());
        (c0, ts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal::{core_temperature, surface_temperature};

    fn p() -> ThermalParams {
        ThermalParams::reference_26650()
    }

    fn ekf(cfg: EstimatorConfig) -> Filter {
        Filter::new(cfg, p(), Some(AdmittancePoly::default_calibration())).unwrap()
    }

    #[test]
    fn equilibrium_prediction_grows_covariance_by_process_noise() {
        let mut cfg = EstimatorConfig::default();
        cfg.x0 = ThermalState::uniform(8.0);
        let mut f = ekf(cfg.clone());
        let e0 = f.initial_state();
        let e1 = f.time_update(&e0, HeatInput::new(0.0, 8.0)).unwrap();
        assert!((e1.x_hat.t_bar - 8.0).abs() < 1e-12 && e1.x_hat.gamma_bar.abs() < 1e-12);
        let d = StateSpaceModel::continuous(&p()).discretize(1.0).unwrap();
        let expect = d.a * cfg.p0_x_matrix() * d.a.transpose() + cfg.r_v();
        assert!((e1.p_x - expect).abs().max() < 1e-12);
        assert_eq!((e1.h_hat, e1.p_h), (e0.h_hat, e0.p_h));
    }

    #[test]
    fn time_update_equals_model_step() {
        let mut f = ekf(EstimatorConfig::default());
        let e0 = f.initial_state();
        let u = HeatInput::new(2.5, 8.0);
        let e1 = f.time_update(&e0, u).unwrap();
        let d = StateSpaceModel::continuous(&p()).discretize(1.0).unwrap();
        assert_eq!(e1.x_hat, d.step(e0.x_hat, u).unwrap());
    }

    #[test]
    fn dual_prediction_inflates_parameter_variance_only() {
        let mut f = ekf(crate::estimation::FilterKind::Dekf.apply(&EstimatorConfig::default()));
        let e0 = f.initial_state();
        let e1 = f.time_update(&e0, HeatInput::new(1.0, 8.0)).unwrap();
        assert_eq!(e1.h_hat, e0.h_hat);
        assert!((e1.p_h - (25.0 + 6.25)).abs() < 1e-12);
    }

    #[test]
    fn zero_innovation_keeps_mean_and_contracts() {
        let f = ekf(EstimatorConfig::default());
        let e0 = f.initial_state();
        let (y, _, _) = f.observe(e0.x_hat, e0.h_hat, 8.0);
        let c = f.measurement_update(&e0, y, 8.0).unwrap();
        assert_eq!(c.innovation, 0.0);
        assert_eq!(c.state.x_hat, e0.x_hat);
        assert!(c.state.p_x.trace() < e0.p_x.trace());
        assert!(c.state.p_x.determinant() < e0.p_x.determinant());
    }

    #[test]
    fn linear_update_matches_bayes_posterior() {
        // scalar oracle: T_surf depends only on T_bar when the gradient prior is tiny
        let mut cfg = crate::estimation::FilterKind::Kf.apply(&EstimatorConfig::default());
        cfg.sigma_t = 0.3;
        cfg.p0_x = [[4.0, 0.0], [0.0, 1e-30]];
        cfg.x0 = ThermalState::new(20.0, 0.0);
        let f = Filter::new(cfg, p(), None).unwrap();
        let e0 = f.initial_state();
        let (_, hx, _) = f.observe(e0.x_hat, e0.h_hat, 8.0);
        let c_t = hx[0];
        let y = 19.0;
        let prior_mean = surface_temperature(e0.x_hat, 8.0, &p());
        let post = f.measurement_update(&e0, y, 8.0).unwrap().state;
        // x | y ~ N(m + P c (y - c m - d)/(c^2 P + R), P R / (c^2 P + R))
        let s = c_t * c_t * 4.0 + 0.09;
        let mean = 20.0 + 4.0 * c_t * (y - prior_mean) / s;
        let var = 4.0 * 0.09 / s;
        assert!((post.x_hat.t_bar - mean).abs() < 1e-12);
        assert!((post.p_x[(0, 0)] - var).abs() < 1e-12);
    }

    #[test]
    fn inert_parameter_filter_leaves_state_path_unchanged() {
        let base = EstimatorConfig {
            beta_e: 0.0,
            p0_h: 0.0,
            ..EstimatorConfig::default()
        };
        let mut plain = ekf(base.clone());
        let mut dual = ekf(EstimatorConfig { dual: true, ..base });
        let (mut a, mut b) = (plain.initial_state(), dual.initial_state());
        for k in 0..200 {
            let u = HeatInput::new(1.0 + (k as f64 * 0.1).sin(), 8.0);
            a = plain.time_update(&a, u).unwrap();
            b = dual.time_update(&b, u).unwrap();
            if k % 24 == 23 {
                a = plain.measurement_update(&a, 3.02, 8.0).unwrap().state;
                b = dual.measurement_update(&b, 3.02, 8.0).unwrap().state;
            }
            assert_eq!(a.x_hat, b.x_hat);
            assert_eq!(a.p_x, b.p_x);
            assert_eq!(a.h_hat, b.h_hat);
        }
    }

    #[test]
    fn iterated_update_reaches_map_stationary_point() {
        let cfg = EstimatorConfig {
            state_iterations: 50,
            ..EstimatorConfig::default()
        };
        let f = ekf(cfg.clone());
        let e0 = f.initial_state();
        let (y, _, _) = f.observe(ThermalState::new(9.0, -40.0), e0.h_hat, 8.0);
        let post = f.measurement_update(&e0, y, 8.0).unwrap().state;
        // grad of 0.5|x - x0|^2_{P^-1} + 0.5 (y - f(x))^2 / R vanishes at the iterate
        let (fx, hx, _) = f.observe(post.x_hat, e0.h_hat, 8.0);
        let dx = post.x_hat.to_vector() - e0.x_hat.to_vector();
        let grad = e0.p_x.try_inverse().unwrap() * dx - hx.transpose() * (y - fx) / cfg.r_n();
        let scale = (hx.transpose() * (y - fx) / cfg.r_n()).amax().max(1.0);
        assert!(grad.amax() < 1e-8 * scale, "{grad:?}");
        let single = ekf(EstimatorConfig::default())
            .measurement_update(&e0, y, 8.0)
            .unwrap()
            .state;
        assert!((single.x_hat.to_vector() - post.x_hat.to_vector()).amax() > 1e-6);
    }

    #[test]
    fn iteration_is_a_no_op_for_linear_measurements() {
        let kf = crate::estimation::FilterKind::Kf.apply(&EstimatorConfig::default());
        let one = Filter::new(kf.clone(), p(), None).unwrap();
        let many = Filter::new(
            EstimatorConfig {
                state_iterations: 8,
                ..kf
            },
            p(),
            None,
        )
        .unwrap();
        let e0 = one.initial_state();
        let a = one.measurement_update(&e0, 12.0, 8.0).unwrap().state;
        let b = many.measurement_update(&e0, 12.0, 8.0).unwrap().state;
        assert!((a.x_hat.to_vector() - b.x_hat.to_vector()).amax() < 1e-10);
        assert!((a.p_x - b.p_x).amax() < 1e-10);
    }

    #[test]
    fn outputs_match_thermal_rows() {
        let f = ekf(EstimatorConfig::default());
        let mut e = f.initial_state();
        e.x_hat = ThermalState::new(22.0, -250.0);
        let (c, s) = f.outputs(&e, 8.0);
        assert!((c - core_temperature(e.x_hat, 8.0, &p())).abs() < 1e-12);
        assert!((s - surface_temperature(e.x_hat, 8.0, &p())).abs() < 1e-12);
    }

    #[test]
    fn admittance_needs_calibration() {
        assert!(Filter::new(EstimatorConfig::default(), p(), None).is_err());
    }
}

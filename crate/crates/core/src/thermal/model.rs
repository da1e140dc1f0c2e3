use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, Vector2};
use num_complex::Complex64;

use super::expm::expm2;
use super::{HeatInput, ThermalParams, ThermalState};
use crate::error::{Error, Result};

/// Two-state linear system `x' = A x + B u`, `y = C x + D u` with
/// `x = [T_bar, gamma_bar]`, `u = [Q, T_inf]`, `y = [T_core, T_surf]`.
///
/// `dt` is `Some` for the zero-order-hold discretization, in which case `a`
/// and `b` hold the discrete matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpaceModel {
    pub a: Matrix2<f64>,
    pub b: Matrix2<f64>,
    pub c: Matrix2<f64>,
    pub d: Matrix2<f64>,
    pub dt: Option<f64>,
}

impl StateSpaceModel {
    /// Closed-form polynomial-approximation matrices for a cell.
    pub fn continuous(p: &ThermalParams) -> Self {
        let (kt, h, r, alpha, vb) = (p.kt(), p.h(), p.r_o(), p.alpha(), p.v_b());
        let den = 24.0 * kt + r * h;
        let a = Matrix2::new(
            -48.0 * alpha * h / (r * den),
            -15.0 * alpha * h / den,
            -320.0 * alpha * h / (r * r * den),
            -120.0 * alpha * (4.0 * kt + r * h) / (r * r * den),
        );
        let b = Matrix2::new(
            alpha / (kt * vb),
            48.0 * alpha * h / (r * den),
            0.0,
            320.0 * alpha * h / (r * r * den),
        );
        let c = Matrix2::new(
            (24.0 * kt - 3.0 * r * h) / den,
            -(120.0 * r * kt + 15.0 * r * r * h) / (8.0 * den),
            24.0 * kt / den,
            15.0 * r * kt / (48.0 * kt + 2.0 * r * h),
        );
        let d = Matrix2::new(0.0, 4.0 * r * h / den, 0.0, r * h / den);
        Self {
            a,
            b,
            c,
            d,
            dt: None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.dt.is_some()
    }

    /// Exact zero-order-hold discretization:
    /// `A_d = exp(A dt)`, `B_d = A^-1 (A_d - I) B`.
    pub fn discretize(&self, dt: f64) -> Result<Self> {
        if self.is_discrete() {
            return Err(Error::State("model is already discrete".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
        }
        let ad = expm2(&self.a, dt);
        // B_d = int_0^dt exp(A s) ds B, read off exp([[A, B], [0, 0]] dt); stays
        // accurate when A is nearly singular (h -> 0)
        let mut aug = Matrix4::zeros();
        aug.fixed_view_mut::<2, 2>(0, 0).copy_from(&(self.a * dt));
        aug.fixed_view_mut::<2, 2>(0, 2).copy_from(&(self.b * dt));
        let bd: Matrix2<f64> = aug.exp().fixed_view::<2, 2>(0, 2).into_owned();
        if !(ad.iter().all(|v| v.is_finite()) && bd.iter().all(|v| v.is_finite())) {
            return Err(Error::Numerical("non-finite discretization".into()));
        }
        Ok(Self {
            a: ad,
            b: bd,
            c: self.c,
            d: self.d,
            dt: Some(dt),
        })
    }

    /// One deterministic zero-order-hold update.
    pub fn step(&self, state: ThermalState, input: HeatInput) -> Result<ThermalState> {
        if !self.is_discrete() {
            return Err(Error::State("step requires a discrete model".into()));
        }
        Ok(ThermalState::from_vector(
            self.a * state.to_vector() + self.b * input.to_vector(),
        ))
    }

    /// `[T_core, T_surf] = C x + D u`.
    pub fn outputs(&self, state: ThermalState, t_inf: f64) -> (f64, f64) {
        let y = self.c * state.to_vector() + self.d * Vector2::new(0.0, t_inf);
        (y[0], y[1])
    }

    /// Equilibrium `-A^-1 B u` of the continuous system.
    pub fn steady_state(&self, input: HeatInput) -> Result<ThermalState> {
        if self.is_discrete() {
            return Err(Error::State(
                "steady state needs the continuous model".into(),
            ));
        }
        let a_inv = self
            .a
            .try_inverse()
            .ok_or(Error::SingularMatrix("continuous A"))?;
        Ok(ThermalState::from_vector(
            -(a_inv * self.b * input.to_vector()),
        ))
    }

    /// `D - C A^-1 B`.
    pub fn dc_gain(&self) -> Result<Matrix2<f64>> {
        if self.is_discrete() {
            return Err(Error::State("dc gain needs the continuous model".into()));
        }
        let a_inv = self
            .a
            .try_inverse()
            .ok_or(Error::SingularMatrix("continuous A"))?;
        Ok(self.d - self.c * a_inv * self.b)
    }

    /// `H(j omega) = D + C (j omega I - A)^-1 B`.
    pub fn frequency_response(&self, omega: f64) -> Result<FreqResponse> {
        if self.is_discrete() {
            return Err(Error::State(
                "frequency response needs the continuous model".into(),
            ));
        }
        let cplx = |m: &Matrix2<f64>| m.map(|v| Complex64::new(v, 0.0));
        let s = Complex64::new(0.0, omega);
        let resolvent = (Matrix2::identity() * s - cplx(&self.a))
            .try_inverse()
            .ok_or(Error::SingularMatrix("sI - A"))?;
        Ok(FreqResponse(
            cplx(&self.d) + cplx(&self.c) * resolvent * cplx(&self.b),
        ))
    }

    /// Eigenvalues of `a` (real and imaginary parts).
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let mu = 0.5 * self.a.trace();
        let disc = Complex64::new(mu * mu - self.a.determinant(), 0.0).sqrt();
        [mu + disc, mu - disc]
    }

    /// Largest eigenvalue modulus of `a`.
    pub fn spectral_radius(&self) -> f64 {
        let [l1, l2] = self.eigenvalues();
        l1.norm().max(l2.norm())
    }
}

/// 2x2 complex transfer matrix; rows are (core, surface), columns (Q, T_inf).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqResponse(pub Matrix2<Complex64>);

impl FreqResponse {
    pub fn h11(&self) -> Complex64 {
        self.0[(0, 0)]
    }
    pub fn h12(&self) -> Complex64 {
        self.0[(0, 1)]
    }
    pub fn h21(&self) -> Complex64 {
        self.0[(1, 0)]
    }
    pub fn h22(&self) -> Complex64 {
        self.0[(1, 1)]
    }
    /// Entries in the order h11, h12, h21, h22.
    pub fn entries(&self) -> [Complex64; 4] {
        [self.h11(), self.h12(), self.h21(), self.h22()]
    }
    pub fn is_finite(&self) -> bool {
        self.entries()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Continuous-time polynomial-approximation model of a cell.
pub fn build_continuous(params: &ThermalParams) -> StateSpaceModel {
    StateSpaceModel::continuous(params)
}

/// Discretize with sampling interval `dt`.
pub fn discretize(model: &StateSpaceModel, dt: f64) -> Result<StateSpaceModel> {
    model.discretize(dt)
}

pub fn step(
    model: &StateSpaceModel,
    state: ThermalState,
    input: HeatInput,
) -> Result<ThermalState> {
    model.step(state, input)
}

/// PA transfer matrix at angular frequency `omega` (rad/s).
pub fn pa_frequency_response(params: &ThermalParams, omega: f64) -> FreqResponse {
    StateSpaceModel::continuous(params)
        .frequency_response(omega)
        .expect("sI - A is invertible for a Hurwitz A")
}

pub fn hz_to_omega(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

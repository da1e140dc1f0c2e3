//! Exact transfer functions of the 1D cylinder with uniform heat generation
//! and a convective surface, and of the quadratic-assumption (QA) estimator.
//!
//! In the Laplace domain the field is `T = T_p + C J0(b r)` with particular
//! part `T_p = Q / (kt a^2 V_b)`, `a^2 = s / alpha`, and Bessel wavenumber
//! `b = j a` (so `b^2 = -s/alpha`). The Robin condition at `r_o` gives
//! `C = (h/kt)(T_inf - T_p) / D`, `D = (h/kt) J0(b r_o) - b J1(b r_o)`.
//! Every transfer function is even in `a`.

use num_complex::Complex64;

use super::bessel::{j0, j0_minus_one, j1};
use crate::thermal::{FreqResponse, ThermalParams};

/// Laplace variable `s` and wavenumber `a = sqrt(s / alpha)` (principal root).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFreq {
    pub s: Complex64,
    pub a: Complex64,
}

impl ComplexFreq {
    pub fn new(s: Complex64, alpha: f64) -> Self {
        Self {
            s,
            a: (s / alpha).sqrt(),
        }
    }

    /// `s = j omega`.
    pub fn from_omega(omega: f64, alpha: f64) -> Self {
        Self::new(Complex64::new(0.0, omega), alpha)
    }

    /// Argument `b r_o = j a r_o` at which the Bessel functions are evaluated.
    pub fn bessel_argument(&self, r_o: f64) -> Complex64 {
        Complex64::i() * self.a * r_o
    }
}

/// Pieces shared by the analytical and QA responses at one frequency.
struct Kernel {
    /// 1 / (kt a^2 V_b)
    particular: Complex64,
    nh: f64,
    j0: Complex64,
    j0m1: Complex64,
    /// b J1(b r_o)
    bj1: Complex64,
    /// 4 J1(z)/z - J0(z), the QA averaging factor
    qa_factor: Complex64,
    den: Complex64,
}

fn kernel(params: &ThermalParams, freq: &ComplexFreq) -> Kernel {
    kernel_with_a(params, freq.a)
}

fn kernel_with_a(params: &ThermalParams, a: Complex64) -> Kernel {
    let (kt, h, r_o, vb) = (params.kt(), params.h(), params.r_o(), params.v_b());
    let b = Complex64::i() * a;
    let z = b * r_o;
    let j0v = j0(z);
    let j1v = j1(z);
    let nh = h / kt;
    let bj1 = b * j1v;
    Kernel {
        particular: (a * a * kt * vb).inv(),
        nh,
        j0: j0v,
        j0m1: j0_minus_one(z),
        bj1,
        qa_factor: 4.0 * j1v / z - j0v,
        den: nh * j0v - bj1,
    }
}

/// Closed-form limit at `s = 0`: steady conduction plus film resistance.
fn dc_response(params: &ThermalParams) -> FreqResponse {
    let (kt, h, r_o, vb) = (params.kt(), params.h(), params.r_o(), params.v_b());
    let film = r_o / (2.0 * h) / vb;
    let core = (r_o * r_o / (4.0 * kt)) / vb + film;
    let one = Complex64::new(1.0, 0.0);
    FreqResponse(nalgebra::Matrix2::new(
        Complex64::new(core, 0.0),
        one,
        Complex64::new(film, 0.0),
        one,
    ))
}

/// Below this `|b r_o|` the DC limit is returned directly.
const DC_ARGUMENT: f64 = 1e-4;

/// Analytical transfer matrix of the cylinder at `omega` (rad/s).
pub fn analytical_frequency_response(params: &ThermalParams, omega: f64) -> FreqResponse {
    let f = ComplexFreq::from_omega(omega, params.alpha());
    if f.bessel_argument(params.r_o()).norm() < DC_ARGUMENT {
        return dc_response(params);
    }
    analytical_at(params, &f)
}

/// Analytical transfer matrix at an arbitrary complex frequency.
pub fn analytical_at(params: &ThermalParams, f: &ComplexFreq) -> FreqResponse {
    let k = kernel(params, f);
    let h11 = k.particular * (k.nh * k.j0m1 - k.bj1) / k.den;
    let h12 = k.nh / k.den;
    let h21 = k.particular * (-k.bj1) / k.den;
    let h22 = k.nh * k.j0 / k.den;
    FreqResponse(nalgebra::Matrix2::new(h11, h12, h21, h22))
}

/// Transfer matrix of the QA estimate `T_core,QA = 2 T_bar - T_surf` driven
/// by the exact field; the surface row is the analytical one.
pub fn qa_frequency_response(params: &ThermalParams, omega: f64) -> FreqResponse {
    let f = ComplexFreq::from_omega(omega, params.alpha());
    if f.bessel_argument(params.r_o()).norm() < DC_ARGUMENT {
        return dc_response(params);
    }
    qa_at(params, &f)
}

pub fn qa_at(params: &ThermalParams, f: &ComplexFreq) -> FreqResponse {
    let exact = analytical_at(params, f);
    let k = kernel(params, f);
    let h11 = k.particular * (k.den - k.nh * k.qa_factor) / k.den;
    let h12 = k.nh * k.qa_factor / k.den;
    FreqResponse(nalgebra::Matrix2::new(h11, h12, exact.h21(), exact.h22()))
}

/// Responses evaluated with the wavenumber negated; used to check evenness.
pub fn analytical_with_wavenumber(params: &ThermalParams, a: Complex64) -> FreqResponse {
    let k = kernel_with_a(params, a);
    let h11 = k.particular * (k.nh * k.j0m1 - k.bj1) / k.den;
    let h12 = k.nh / k.den;
    let h21 = k.particular * (-k.bj1) / k.den;
    let h22 = k.nh * k.j0 / k.den;
    FreqResponse(nalgebra::Matrix2::new(h11, h12, h21, h22))
}

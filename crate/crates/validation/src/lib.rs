//! Independent oracles and reference scenarios for validating the estimator
//! stack end to end.

use itd_core::estimation::{EstimatorConfig, FilterKind};
use itd_core::impedance::AdmittancePoly;
use itd_core::io::{
    generate_drive_cycle, synthesize_telemetry, DriveCycleSpec, NoiseSpec, PlantSetup,
    TelemetryRecord,
};
use itd_core::ThermalParams;
use num_bigint::BigInt;
use num_complex::Complex64;

pub const U_OCV: f64 = 3.3;

/// Noisy oracle telemetry of the default validation cycle.
pub fn validation_telemetry(seed: u64) -> Vec<TelemetryRecord> {
    telemetry(seed, NoiseSpec::default())
}

pub fn telemetry(seed: u64, noise: NoiseSpec) -> Vec<TelemetryRecord> {
    let cycle = generate_drive_cycle(&DriveCycleSpec::default(), seed).unwrap();
    synthesize_telemetry(
        &cycle,
        &ThermalParams::reference_26650(),
        &AdmittancePoly::default_calibration(),
        noise,
        seed.wrapping_add(1000),
        &PlantSetup::default(),
    )
    .unwrap()
}

/// Tuning used by the closed-loop validation scenarios: the plant differs
/// from the model only by discretization, so the process noise sits far
/// below the default, and the state update is relinearized to absorb the
/// large initial error.
pub fn validation_estimator() -> EstimatorConfig {
    EstimatorConfig {
        beta_v: 0.003,
        state_iterations: 10,
        ..EstimatorConfig::default()
    }
}

/// Validation tuning with `h0 = 2 h_true` and the given filter.
pub fn wrong_h_estimator(kind: FilterKind) -> EstimatorConfig {
    let cfg = EstimatorConfig {
        h0: 2.0 * ThermalParams::reference_26650().h(),
        ..validation_estimator()
    };
    kind.apply(&cfg)
}

/// Fixed-point value scaled by `10^DIGITS`.
const DIGITS: u32 = 140;

fn scale() -> BigInt {
    BigInt::from(10u32).pow(DIGITS)
}

/// Exact conversion of a double to fixed point (floor in the last place).
fn to_fixed(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::from(0);
    }
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    };
    let scaled = BigInt::from(mant) * scale();
    let v = if exp >= 0 {
        scaled << exp as usize
    } else {
        scaled >> (-exp) as usize
    };
    if negative {
        -v
    } else {
        v
    }
}

fn from_fixed(v: &BigInt) -> f64 {
    format!("{v}e-{DIGITS}").parse().unwrap()
}

#[derive(Clone)]
struct Fixed {
    re: BigInt,
    im: BigInt,
}

impl Fixed {
    fn mul(&self, o: &Fixed, s: &BigInt) -> Fixed {
        Fixed {
            re: (&self.re * &o.re - &self.im * &o.im) / s,
            im: (&self.re * &o.im + &self.im * &o.re) / s,
        }
    }

    fn div_int(&self, d: u64) -> Fixed {
        Fixed {
            re: &self.re / d,
            im: &self.im / d,
        }
    }

    fn add(&mut self, o: &Fixed) {
        self.re += &o.re;
        self.im += &o.im;
    }

    fn is_negligible(&self) -> bool {
        self.re.bits() <= 1 && self.im.bits() <= 1
    }
}

/// `J_n(z)` from the ascending series in 140-digit fixed point.
pub fn bessel_oracle(n: u32, z: Complex64) -> Complex64 {
    let sum = series(n, z);
    Complex64::new(from_fixed(&sum.re), from_fixed(&sum.im))
}

/// `J0(z) - 1` with the subtraction done before rounding.
pub fn bessel_j0_minus_one_oracle(z: Complex64) -> Complex64 {
    let sum = series(0, z);
    Complex64::new(from_fixed(&(sum.re - scale())), from_fixed(&sum.im))
}

fn series(n: u32, z: Complex64) -> Fixed {
    let s = scale();
    let half = Fixed {
        re: to_fixed(z.re) / 2,
        im: to_fixed(z.im) / 2,
    };
    let sq = half.mul(&half, &s);
    let w = Fixed {
        re: -sq.re,
        im: -sq.im,
    };
    let mut term = Fixed {
        re: s.clone(),
        im: BigInt::from(0),
    };
    for k in 1..=n as u64 {
        term = term.mul(&half, &s).div_int(k);
    }
    let mut sum = term.clone();
    let mut k = 0u64;
    loop {
        k += 1;
        term = term.mul(&w, &s).div_int(k * (k + n as u64));
        sum.add(&term);
        if term.is_negligible() && k as f64 > z.norm() {
            break;
        }
    }
    sum
}

/// Which input of the transfer matrix is driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Drive {
    Heat,
    Coolant,
}

/// Periodic steady state of the FD oracle under a unit-amplitude sinusoid.
pub struct SinusoidalResponse {
    /// Complex gains `(core, surface)` in the `e^{j omega t}` convention.
    pub core: Complex64,
    pub surface: Complex64,
    pub energy: itd_core::reference::EnergyBalance,
}

/// Runs the oracle until the initial transient has decayed below machine
/// precision, then projects the last period onto sin and cos.
pub fn sinusoidal_response(
    params: &ThermalParams,
    f_hz: f64,
    drive: Drive,
    n_nodes: usize,
    dt: f64,
) -> SinusoidalResponse {
    use itd_core::reference::{EnergyBalance, FdConfig, FdSolver};
    let period = 1.0 / f_hz;
    let steps_per_period = (period / dt).round() as usize;
    let dt = period / steps_per_period as f64;
    let solver = FdSolver::new(params, FdConfig { n_nodes, dt }).unwrap();
    // slowest decay is the lumped film mode
    let tau = params.heat_capacity() / (params.h() * params.side_area());
    let settle_periods = ((20.0 * tau) / period).ceil().max(2.0) as usize;
    let omega = 2.0 * std::f64::consts::PI * f_hz;
    let mut temps = vec![0.0; n_nodes];
    let mut energy = EnergyBalance::default();
    let (mut core, mut surface) = (Complex64::default(), Complex64::default());
    let total = (settle_periods + 1) * steps_per_period;
    for n in 1..=total {
        let t = n as f64 * dt;
        let u = (omega * t).sin();
        let (q, t_inf) = match drive {
            Drive::Heat => (u, 0.0),
            Drive::Coolant => (0.0, u),
        };
        energy.accumulate(&solver.step(&mut temps, q, t_inf));
        if n > total - steps_per_period {
            let basis = Complex64::new((omega * t).sin(), (omega * t).cos());
            core += basis * temps[0];
            surface += basis * temps[n_nodes - 1];
        }
    }
    let norm = 2.0 / steps_per_period as f64;
    SinusoidalResponse {
        core: core * norm,
        surface: surface * norm,
        energy,
    }
}

/// Amplitude ratio error and phase error (degrees) of `got` against `want`.
pub fn gain_phase_error(got: Complex64, want: Complex64) -> (f64, f64) {
    let amp = (got.norm() - want.norm()).abs() / want.norm();
    let phase = (got / want).arg().to_degrees().abs();
    (amp, phase)
}

/// Averaged admittance at complex `(T_bar, gamma_bar, h)` by quadrature of
/// the quartic radial profile, for complex-step differentiation.
pub fn admittance_complex(
    poly: &AdmittancePoly,
    t_bar: Complex64,
    gamma_bar: Complex64,
    h: Complex64,
    t_inf: f64,
    params: &ThermalParams,
) -> Complex64 {
    let (k, r_o) = (params.kt(), params.r_o());
    let rh = h * r_o;
    let t_surf = (t_bar * 24.0 * k + gamma_bar * 7.5 * k * r_o + rh * t_inf) / (rh + 24.0 * k);
    let c0 = t_surf * 4.0 - t_bar * 3.0 - gamma_bar * (15.0 * r_o / 8.0);
    let c2 = t_surf * -18.0 + t_bar * 18.0 + gamma_bar * (7.5 * r_o);
    let c4 = t_surf * 15.0 - t_bar * 15.0 - gamma_bar * (45.0 * r_o / 8.0);
    // Y' = 2 int_0^1 s Y(T(s r_o)) ds; the integrand is a polynomial of degree 9
    let gl = itd_core::quadrature::GaussLegendre::new(8);
    let at = |s: f64| {
        let s2 = s * s;
        let t = c0 + c2 * s2 + c4 * s2 * s2;
        (t * t * poly.a3() + t * poly.a2() + poly.a1()) * s * 2.0
    };
    Complex64::new(
        gl.integrate(0.0, 1.0, |s| at(s).re),
        gl.integrate(0.0, 1.0, |s| at(s).im),
    )
}

/// Gradient `(d/dT_bar, d/dgamma_bar, d/dh)` of the averaged admittance by
/// complex step; free of subtractive cancellation.
pub fn admittance_gradient_oracle(
    poly: &AdmittancePoly,
    x: itd_core::ThermalState,
    h: f64,
    t_inf: f64,
    params: &ThermalParams,
) -> [f64; 3] {
    let probe = |d: [f64; 3]| {
        admittance_complex(
            poly,
            Complex64::new(x.t_bar, d[0]),
            Complex64::new(x.gamma_bar, d[1]),
            Complex64::new(h, d[2]),
            t_inf,
            params,
        )
    };
    let steps = [
        1e-20 * x.t_bar.abs().max(1.0),
        1e-20 * x.gamma_bar.abs().max(1.0),
        1e-20 * h,
    ];
    [
        probe([steps[0], 0.0, 0.0]).im / steps[0],
        probe([0.0, steps[1], 0.0]).im / steps[1],
        probe([0.0, 0.0, steps[2]]).im / steps[2],
    ]
}

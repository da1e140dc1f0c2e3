//! Bessel functions of the first kind, orders 0 and 1, complex argument.
//!
//! Ascending power series for `|z| <= SERIES_RADIUS`, Hankel asymptotic
//! expansion beyond it (after reflecting into the right half plane).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Switch-over radius between the power series and the asymptotic expansion.
pub const SERIES_RADIUS: f64 = 12.0;

/// `J_order(z)` for `order` 0 or 1.
pub fn bessel_j(order: u32, z: Complex64) -> Result<Complex64> {
    match order {
        0 => Ok(j0(z)),
        1 => Ok(j1(z)),
        n => Err(Error::Domain(format!(
            "Bessel order {n} not supported (0 or 1 only)"
        ))),
    }
}

pub fn j0(z: Complex64) -> Complex64 {
    eval(0, z)
}

pub fn j1(z: Complex64) -> Complex64 {
    eval(1, z)
}

/// `J0(z) - 1` without cancellation for small `|z|`.
pub fn j0_minus_one(z: Complex64) -> Complex64 {
    if z.norm() > 1.0 {
        return j0(z) - 1.0;
    }
    let w = -z * z * 0.25;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..40 {
        let kf = k as f64;
        term *= w / (kf * kf);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

fn eval(nu: u32, z: Complex64) -> Complex64 {
    if z.norm() <= SERIES_RADIUS {
        series(nu, z)
    } else if z.re >= 0.0 {
        asymptotic(nu, z)
    } else {
        // J_nu(-z) = (-1)^nu J_nu(z)
        let v = asymptotic(nu, -z);
        if nu % 2 == 0 {
            v
        } else {
            -v
        }
    }
}

fn series(nu: u32, z: Complex64) -> Complex64 {
    let half = z * 0.5;
    let w = -half * half;
    let nuf = nu as f64;
    let mut term = if nu == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        half
    };
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= w / (kf * (kf + nuf));
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() && kf > half.norm() {
            break;
        }
    }
    sum
}

fn asymptotic(nu: u32, z: Complex64) -> Complex64 {
    let mu = 4.0 * (nu as f64).powi(2);
    let inv = z.inv();
    // a_k(nu) / z^k, accumulated term by term; stop at the smallest term.
    let mut p = Complex64::new(1.0, 0.0);
    let mut q = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= inv * ((mu - odd * odd) / (kf * 8.0));
        let mag = term.norm();
        if mag >= last {
            break;
        }
        last = mag;
        // a_k / z^k enters P (k even) or Q (k odd) with sign (-1)^floor(k/2)
        let signed = if (k / 2) % 2 == 0 { term } else { -term };
        if k % 2 == 0 {
            p += signed;
        } else {
            q += signed;
        }
        if mag < 1e-17 {
            break;
        }
    }
    let chi = z - (0.5 * nu as f64 + 0.25) * PI;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(j0(c(0.0, 0.0)), c(1.0, 0.0));
        assert_eq!(j1(c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn first_zero_of_j0() {
        assert!(j0(c(2.404_825_557_695_773, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn known_real_values() {
        // Abramowitz & Stegun table 9.1
        assert!((j0(c(1.0, 0.0)).re - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j1(c(1.0, 0.0)).re - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((j0(c(20.0, 0.0)).re - 0.167_024_664_340_583_1).abs() < 1e-13);
        assert!((j1(c(20.0, 0.0)).re - 0.066_833_124_175_850_04).abs() < 1e-13);
    }

    #[test]
    fn imaginary_axis_gives_modified_bessel() {
        // J0(ix) = I0(x), I0(1) = 1.2660658777520082
        let v = j0(c(0.0, 1.0));
        assert!((v.re - 1.266_065_877_752_008_2).abs() < 1e-15 && v.im.abs() < 1e-15);
        // J1(ix) = i I1(x), I1(1) = 0.5651591039924851
        let v = j1(c(0.0, 1.0));
        assert!(v.re.abs() < 1e-15 && (v.im - 0.565_159_103_992_485_1).abs() < 1e-15);
    }

    #[test]
    fn derivative_identity() {
        let z = c(1.0, 1.0);
        let h = 1e-6;
        let d = (j0(z + h) - j0(z - h)) / (2.0 * h);
        assert!((d + j1(z)).norm() < 1e-6);
        let z = c(15.0, -9.0);
        let d = (j0(z + h) - j0(z - h)) / (2.0 * h);
        assert!((d + j1(z)).norm() < 1e-6 * j1(z).norm());
    }

    #[test]
    fn reflection_and_order_check() {
        let z = c(-30.0, 4.0);
        assert!((j0(z) - j0(-z)).norm() < 1e-12 * j0(z).norm());
        assert!((j1(z) + j1(-z)).norm() < 1e-12 * j1(z).norm());
        assert!(bessel_j(2, z).is_err());
        assert_eq!(bessel_j(0, z).unwrap(), j0(z));
    }

    #[test]
    fn j0_minus_one_small_argument() {
        let z = c(1e-5, 1e-5);
        let exact = -z * z / 4.0 + (z * z / 4.0).powi(2) / 4.0;
        assert!((j0_minus_one(z) - exact).norm() < 1e-15 * exact.norm());
    }
}

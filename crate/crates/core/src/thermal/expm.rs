//! Matrix exponential of a real 2x2 matrix.
//!
//! By Cayley-Hamilton, with `mu = tr(A)/2` and `delta^2 = mu^2 - det(A)`,
//!
//! ```text
//! exp(A t) = exp(mu t) [ cosh(delta t) I + sinh(delta t)/delta (A - mu I) ]
//! ```
//!
//! which covers real (delta real) and complex (delta imaginary) eigenvalue
//! pairs. When the eigenvalues nearly coincide the hyperbolic terms are
//! evaluated from their Taylor series in `(delta t)^2`.

use nalgebra::Matrix2;

/// Eigenvalue separation below which the series branch is used.
pub const EIGEN_GAP_TOL: f64 = 1e-9;

pub fn expm2(a: &Matrix2<f64>, t: f64) -> Matrix2<f64> {
    let mu = 0.5 * a.trace();
    let det = a.determinant();
    let d2 = mu * mu - det;
    let gap = 2.0 * d2.abs().sqrt();

    let (ch, shc) = if gap < EIGEN_GAP_TOL {
        let (c, s) = cosh_sinhc_series(d2 * t * t);
        (c, s * t)
    } else if d2 > 0.0 {
        let d = d2.sqrt();
        ((d * t).cosh(), (d * t).sinh() / d)
    } else {
        let w = (-d2).sqrt();
        ((w * t).cos(), (w * t).sin() / w)
    };
    let shifted = a - Matrix2::identity() * mu;
    (Matrix2::identity() * ch + shifted * shc) * (mu * t).exp()
}

/// cosh(x) and sinh(x)/x as series in x^2.
fn cosh_sinhc_series(x2: f64) -> (f64, f64) {
    let mut ch = 1.0;
    let mut sh = 1.0;
    let mut term_c = 1.0;
    let mut term_s = 1.0;
    for k in 1..30 {
        let kf = k as f64;
        term_c *= x2 / ((2.0 * kf - 1.0) * (2.0 * kf));
        term_s *= x2 / ((2.0 * kf) * (2.0 * kf + 1.0));
        ch += term_c;
        sh += term_s;
        if term_c.abs() < 1e-18 * ch.abs() && term_s.abs() < 1e-18 * sh.abs() {
            break;
        }
    }
    (ch, sh)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Truncated Taylor series of exp(A t) with scaling and squaring, used as
    /// an independent reference.
    fn expm_taylor(a: &Matrix2<f64>, t: f64) -> Matrix2<f64> {
        let mut m = a * t;
        let norm = m.abs().max();
        let mut squarings = 0;
        let mut scale = 1.0;
        while norm * scale > 0.1 {
            scale *= 0.5;
            squarings += 1;
        }
        m *= scale;
        let mut sum = Matrix2::identity();
        let mut term = Matrix2::identity();
        for k in 1..30 {
            term = term * m / k as f64;
            sum += term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    fn close(a: &Matrix2<f64>, b: &Matrix2<f64>, tol: f64) -> bool {
        (a - b).abs().max() <= tol * b.abs().max().max(1.0)
    }

    #[test]
    fn real_distinct_eigenvalues() {
        let a = Matrix2::new(-2.0e-3, -1.5e-1, -1.1e-2, -2.2e-2);
        for t in [0.5, 1.0, 24.0, 300.0] {
            assert!(close(&expm2(&a, t), &expm_taylor(&a, t), 1e-13));
        }
    }

    #[test]
    fn complex_eigenvalues() {
        let a = Matrix2::new(-0.1, 2.0, -3.0, -0.2);
        for t in [0.1, 1.0, 5.0] {
            assert!(close(&expm2(&a, t), &expm_taylor(&a, t), 1e-12));
        }
    }

    #[test]
    fn repeated_eigenvalues_use_series() {
        // Jordan block: exp = e^{-t} [[1, t], [0, 1]]
        let a = Matrix2::new(-1.0, 1.0, 0.0, -1.0);
        let t = 2.0;
        let e = expm2(&a, t);
        let want = Matrix2::new(1.0, t, 0.0, 1.0) * (-t).exp();
        assert!(close(&e, &want, 1e-14));
        // scalar multiple of identity
        let a = Matrix2::identity() * -0.3;
        assert!(close(
            &expm2(&a, 1.0),
            &(Matrix2::identity() * (-0.3f64).exp()),
            1e-15
        ));
    }

    #[test]
    fn near_repeated_branch_is_continuous() {
        let eps = 1e-10;
        let a = Matrix2::new(-1.0, 1.0, eps * eps, -1.0);
        let b = Matrix2::new(-1.0, 1.0, 4e-18, -1.0);
        assert!(close(&expm2(&a, 1.5), &expm2(&b, 1.5), 1e-12));
        assert!(close(&expm2(&a, 1.5), &expm_taylor(&a, 1.5), 1e-13));
    }
}

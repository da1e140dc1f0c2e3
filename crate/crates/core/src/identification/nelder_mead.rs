//! Nelder-Mead downhill simplex with reflection 1, expansion 2, contraction
//! 0.5 and shrink 0.5.

use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop once every vertex lies within this sup-norm distance of the best.
    pub xtol: f64,
    /// Offset of the initial vertices along each axis.
    pub initial_step: f64,
    /// Policy for the independent evaluations of the initial simplex and shrinks.
    pub exec: Exec,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            xtol: 1e-6,
            initial_step: 0.05,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .flat_map(|(v, _)| v.iter().zip(best).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

fn sort(simplex: &mut [(Vec<f64>, f64)]) {
    // NaN sorts last
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
}

/// Minimizes `f` from `x0`. The best point found is always returned; check
/// `converged` for whether `xtol` was reached within `max_iter`.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let n = x0.len();
    let eval = |x: &Vec<f64>| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut vertices = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        vertices.push(v);
    }
    let values = opts.exec.map(&vertices, eval);
    let mut evaluations = n + 1;
    let mut simplex: Vec<(Vec<f64>, f64)> = vertices.into_iter().zip(values).collect();
    sort(&mut simplex);

    let along = |c: &[f64], d: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(d).map(|(ci, di)| ci + t * (di - ci)).collect()
    };
    let mut iterations = 0;
    let mut converged = diameter(&simplex) < opts.xtol;
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let worst = simplex[n].clone();
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let xr = along(&centroid, &worst.0, -1.0);
        let fr = eval(&xr);
        evaluations += 1;
        let (f_best, f_second) = (simplex[0].1, simplex[n - 1].1);
        let mut replacement = None;
        if fr < f_best {
            let xe = along(&centroid, &worst.0, -2.0);
            let fe = eval(&xe);
            evaluations += 1;
            replacement = Some(if fe < fr { (xe, fe) } else { (xr, fr) });
        } else if fr < f_second {
            replacement = Some((xr, fr));
        } else if fr < worst.1 {
            let xc = along(&centroid, &xr, 0.5);
            let fc = eval(&xc);
            evaluations += 1;
            if fc <= fr {
                replacement = Some((xc, fc));
            }
        } else {
            let xc = along(&centroid, &worst.0, 0.5);
            let fc = eval(&xc);
            evaluations += 1;
            if fc < worst.1 {
                replacement = Some((xc, fc));
            }
        }
        match replacement {
            Some(v) => simplex[n] = v,
            None => {
                let best = simplex[0].0.clone();
                let shrunk: Vec<Vec<f64>> = simplex[1..]
                    .iter()
                    .map(|(v, _)| along(&best, v, 0.5))
                    .collect();
                let values = opts.exec.map(&shrunk, eval);
                evaluations += n;
                for (slot, (v, fv)) in simplex[1..].iter_mut().zip(shrunk.into_iter().zip(values)) {
                    *slot = (v, fv);
                }
            }
        }
        sort(&mut simplex);
        converged = diameter(&simplex) < opts.xtol;
    }
    let (x, f) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        f,
        iterations,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn finds_rosenbrock_minimum() {
        let opts = NelderMeadOptions {
            xtol: 1e-10,
            initial_step: 0.5,
            ..Default::default()
        };
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &opts);
        assert!(r.converged);
        assert!(
            (r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            r.x
        );
    }

    #[test]
    fn quadratic_bowl_in_three_dimensions() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 0.5 * x[2].powi(2);
        let r = nelder_mead(f, &[0.0, 0.0, 1.0], &NelderMeadOptions::default());
        assert!(r.converged && r.f < 1e-10);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let opts = NelderMeadOptions {
            max_iter: 5,
            ..Default::default()
        };
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &opts);
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
        assert!(r.f <= rosenbrock(&[-1.2, 1.0]));
    }

    #[test]
    fn nan_is_treated_as_worst() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                (x[0] - 1.0).powi(2)
            }
        };
        let r = nelder_mead(f, &[0.5], &NelderMeadOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn policies_agree() {
        let seq = NelderMeadOptions {
            exec: Exec::Sequential,
            ..Default::default()
        };
        let par = NelderMeadOptions {
            exec: Exec::Parallel,
            ..Default::default()
        };
        assert_eq!(
            nelder_mead(rosenbrock, &[-1.2, 1.0], &seq),
            nelder_mead(rosenbrock, &[-1.2, 1.0], &par)
        );
    }
}

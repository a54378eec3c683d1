//! Nelder-Mead simplex minimizer with optional box bounds.
//!
//! Used by the avoided-crossing fit and the ramp-correction search. Points
//! outside the bounds are projected back onto the box before evaluation.

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop when the spread of objective values across the simplex drops below this.
    pub f_tol: f64,
    /// Stop when every vertex is within this distance of the best one (per coordinate).
    pub x_tol: f64,
    /// Initial step per coordinate.
    pub step: Vec<f64>,
    pub bounds: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], bounds: Option<&[(f64, f64)]>) {
    if let Some(b) = bounds {
        for (xi, &(lo, hi)) in x.iter_mut().zip(b) {
            *xi = xi.clamp(lo, hi);
        }
    }
}

pub fn minimize<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(opts.step.len(), n, "one step per coordinate");
    let bounds = opts.bounds.as_deref();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut evals = 0usize;
    let mut eval = |x: &mut Vec<f64>, evals: &mut usize| {
        project(x, bounds);
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    let f0 = eval(&mut start, &mut evals);
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut v = start.clone();
        v[i] += opts.step[i];
        // step back the other way if the bound swallowed the move
        if let Some(b) = bounds {
            if v[i] > b[i].1 {
                v[i] = start[i] - opts.step[i];
            }
        }
        let fv = eval(&mut v, &mut evals);
        simplex.push((v, fv));
    }

    let mut converged = false;
    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let f_spread = (worst - best).abs();
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= opts.f_tol && x_spread <= opts.x_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let mut xr = along(alpha);
        let fr = eval(&mut xr, &mut evals);
        if fr < simplex[0].1 {
            let mut xe = along(gamma);
            let fe = eval(&mut xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (mut xc, outside) = if fr < worst {
                (along(rho), true)
            } else {
                (along(-rho), false)
            };
            let fc = eval(&mut xc, &mut evals);
            if (outside && fc <= fr) || (!outside && fc < worst) {
                simplex[n] = (xc, fc);
            } else {
                let best_x = simplex[0].0.clone();
                for (v, fv) in simplex.iter_mut().skip(1) {
                    let mut shrunk: Vec<f64> = best_x
                        .iter()
                        .zip(v.iter())
                        .map(|(b, x)| b + sigma * (x - b))
                        .collect();
                    *fv = eval(&mut shrunk, &mut evals);
                    *v = shrunk;
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    SimplexResult {
        x,
        f,
        evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(n: usize) -> SimplexOptions {
        SimplexOptions {
            max_evals: 20_000,
            f_tol: 1e-14,
            x_tol: 1e-9,
            step: vec![0.5; n],
            bounds: None,
        }
    }

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(rosen, &[-1.2, 1.0], &opts(2));
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn respects_bounds() {
        let mut o = opts(2);
        o.bounds = Some(vec![(-1.0, 1.0), (-1.0, 1.0)]);
        let r = minimize(|x| (x[0] - 3.0).powi(2) + (x[1] + 0.25).powi(2), &[0.0, 0.0], &o);
        assert!((r.x[0] - 1.0).abs() < 1e-9);
        assert!((r.x[1] + 0.25).abs() < 1e-5);
    }
}

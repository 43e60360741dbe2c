//! Small dense optimizers used by the apogee search and the Ritz solver.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            x_tol: 1e-10,
            f_tol: 1e-14,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Downhill simplex minimization.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> MinimizeResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i].abs() > 1e-8 { opts.initial_step * x[i].abs().max(1.0) } else { opts.initial_step };
        let v = f(&x);
        simplex.push((x, v));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread_f = (simplex[n].1 - simplex[0].1).abs();
        let spread_x = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread_x <= opts.x_tol || (spread_f <= opts.f_tol && spread_x <= opts.x_tol.sqrt()) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-alpha);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-gamma);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(-rho);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(rho);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&best) {
                        *xi = bi + sigma * (*xi - bi);
                    }
                    *v = f(x);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    MinimizeResult {
        x,
        value,
        iterations,
        converged,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    /// Stop once the residual norm reaches this value.
    pub target_norm: f64,
    pub max_iter: usize,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            target_norm: 1e-10,
            max_iter: 500,
            initial_lambda: 1e-3,
        }
    }
}

/// Levenberg-Marquardt with Marquardt's diagonal scaling.
///
/// `eval` returns the residual vector and its Jacobian at a point.
pub fn levenberg_marquardt<F>(eval: F, x0: &[f64], opts: &LmOptions) -> MinimizeResult
where
    F: Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let mut x = DVector::from_column_slice(x0);
    let (mut r, mut jac) = eval(x.as_slice());
    let mut norm = r.norm();
    let mut lambda = opts.initial_lambda;
    let mut iterations = 0;

    while iterations < opts.max_iter && norm > opts.target_norm {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut lhs = jtj.clone();
            for i in 0..lhs.nrows() {
                lhs[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let step = match lhs.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => match lhs.lu().solve(&(-&grad)) {
                    Some(s) => s,
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                },
            };
            let trial = &x + &step;
            let (rt, jt) = eval(trial.as_slice());
            let nt = rt.norm();
            if nt.is_finite() && nt < norm {
                x = trial;
                r = rt;
                jac = jt;
                norm = nt;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    MinimizeResult {
        converged: norm <= opts.target_norm,
        x: x.as_slice().to_vec(),
        value: norm,
        iterations,
    }
}

//! Rayleigh-Ritz solver for the unbounded-control time-minimum problem.
//!
//! Trial curves are `y(x) = y0(x) + Σ c_i y_i(x)` with `y0` the chord between
//! the endpoints and `y_i = (x - x0)(x - xf)^i`. The travel time
//! `T(c) = ∫ (x + y y') / f(x, y) dx` is made stationary by driving the residuals
//! `I_i = ∫ ∂L/∂c_i dx` to zero from random starts.

use nalgebra::{DMatrix, DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, nelder_mead, LmOptions, NelderMeadOptions};
use crate::planar::PlanarSystem;
use crate::quadrature::QuadratureRule;
use crate::recovery::{recover_control, ControlProfile};
use crate::trajectory::Trajectory;

/// Smallest `|f|` accepted by the integrand.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Residual norm returned for curves leaving the chimney, scaled by `1 + depth`.
pub const PENALTY: f64 = 1e6;
/// Points of the uniform grid used for the feasibility check.
pub const CHECK_POINTS: usize = 1001;

/// `L = (x + y y') / f(x, y)`.
pub fn lagrangian(x: f64, y: f64, dy_dx: f64, system: &PlanarSystem) -> Result<f64> {
    let f = system.purity_derivative(&Vector2::new(x, y));
    if f.abs() < SINGULAR_TOL {
        return Err(Error::ChimneyViolation { x, f });
    }
    Ok((x + y * dy_dx) / f)
}

#[derive(Debug, Clone)]
pub struct RitzProblem {
    pub system: PlanarSystem,
    pub start: Vector2<f64>,
    pub end: Vector2<f64>,
    pub order: usize,
    rule: QuadratureRule,
    check_grid: Vec<f64>,
}

/// Residual vector with its Jacobian (the Hessian of the travel time).
#[derive(Debug, Clone)]
pub struct Residuals {
    pub values: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    /// Depth `max(-f)` of a chimney violation, if any.
    pub violation: Option<f64>,
}

impl Residuals {
    /// `ν`, replaced by the penalty when the curve leaves the chimney.
    pub fn nu(&self) -> f64 {
        match self.violation {
            Some(depth) => PENALTY * (1.0 + depth),
            None => self.values.norm(),
        }
    }
}

impl RitzProblem {
    pub fn new(system: PlanarSystem, start: Vector2<f64>, end: Vector2<f64>, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("basis order must be positive"));
        }
        if !(start.iter().chain(end.iter()).all(|v| v.is_finite())) {
            return Err(Error::invalid("endpoints must be finite"));
        }
        if (end.x - start.x).abs() < 1e-14 {
            return Err(Error::invalid("endpoints share the same x coordinate"));
        }
        for q in [start, end] {
            let f = system.purity_derivative(&q);
            if !(f > 0.0) {
                return Err(Error::ChimneyViolation { x: q.x, f });
            }
        }
        let rule = QuadratureRule::default_for(start.x, end.x);
        let n = CHECK_POINTS - 1;
        let check_grid = (0..=n)
            .map(|k| start.x + (end.x - start.x) * k as f64 / n as f64)
            .collect();
        Ok(Self {
            system,
            start,
            end,
            order,
            rule,
            check_grid,
        })
    }

    /// Problem between the standard endpoints `eps b̂` and `(1 - delta) q_apogee`.
    pub fn from_system(system: PlanarSystem, order: usize, eps: f64, delta: f64) -> Result<Self> {
        let (q0, qf) = system.endpoints(eps, delta)?;
        Self::new(system, q0, qf, order)
    }

    /// Same problem on a quadrature grid with every panel split.
    pub fn refined(&self) -> Self {
        Self {
            rule: self.rule.refined(),
            ..self.clone()
        }
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Basis function `i` and its derivative; `i = 0` is the chord.
    pub fn basis(&self, i: usize, x: f64) -> (f64, f64) {
        let (x0, xf) = (self.start.x, self.end.x);
        if i == 0 {
            let slope = (self.end.y - self.start.y) / (xf - x0);
            return (self.start.y + slope * (x - x0), slope);
        }
        let p = (x - xf).powi(i as i32);
        let dp = i as f64 * (x - xf).powi(i as i32 - 1);
        ((x - x0) * p, p + (x - x0) * dp)
    }

    /// `(y, y')` of the trial curve.
    pub fn curve(&self, c: &[f64], x: f64) -> (f64, f64) {
        let (mut y, mut dy) = self.basis(0, x);
        for (i, ci) in c.iter().enumerate() {
            let (v, d) = self.basis(i + 1, x);
            y += ci * v;
            dy += ci * d;
        }
        (y, dy)
    }

    /// Depth of the deepest chimney violation on the quadrature nodes and check grid.
    pub fn chimney_violation(&self, c: &[f64]) -> Option<f64> {
        let mut worst = f64::INFINITY;
        for &x in self.rule.nodes.iter().chain(&self.check_grid) {
            let (y, _) = self.curve(c, x);
            let f = self.system.purity_derivative(&Vector2::new(x, y));
            if !f.is_finite() {
                return Some(f64::MAX.sqrt());
            }
            worst = worst.min(f);
        }
        // the endpoints themselves are inside by construction; tolerate the
        // shrinking margin of the grid points next to them
        (worst <= SINGULAR_TOL).then(|| (-worst).max(0.0))
    }

    /// Travel time `∫ L dx`.
    pub fn functional(&self, c: &[f64]) -> Result<f64> {
        self.check_len(c)?;
        if let Some(depth) = self.chimney_violation(c) {
            return Err(Error::ChimneyViolation { x: f64::NAN, f: -depth });
        }
        let mut total = 0.0;
        for (&x, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let (y, dy) = self.curve(c, x);
            total += w * lagrangian(x, y, dy, &self.system)?;
        }
        Ok(total)
    }

    pub fn travel_time(&self, c: &[f64]) -> Result<f64> {
        self.functional(c)
    }

    /// Residuals `I_i = ∫ ∂L/∂c_i dx` and the Jacobian `∫ ∂²L/∂c_i∂c_j dx`.
    pub fn residuals(&self, c: &[f64]) -> Residuals {
        let m = self.order;
        let mut values = DVector::zeros(m);
        let mut jacobian = DMatrix::zeros(m, m);
        if let Some(depth) = self.chimney_violation(c) {
            let fill = PENALTY * (1.0 + depth) / (m as f64).sqrt();
            values.fill(fill);
            return Residuals {
                values,
                jacobian,
                violation: Some(depth),
            };
        }
        let sys = &self.system;
        let mut phi = vec![0.0; m];
        let mut dphi = vec![0.0; m];
        let mut n_i = vec![0.0; m];
        let mut d_i = vec![0.0; m];
        for (&x, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let (y, dy) = self.curve(c, x);
            for i in 0..m {
                let (v, d) = self.basis(i + 1, x);
                phi[i] = v;
                dphi[i] = d;
            }
            let n = x + y * dy;
            let f = sys.purity_derivative(&Vector2::new(x, y));
            let fy = sys.b2 + 2.0 * sys.alpha2 * y;
            let inv = 1.0 / f;
            for i in 0..m {
                n_i[i] = dy * phi[i] + y * dphi[i];
                d_i[i] = fy * phi[i];
                values[i] += w * (n_i[i] * inv - n * d_i[i] * inv * inv);
            }
            for i in 0..m {
                for j in 0..=i {
                    let n_ij = phi[i] * dphi[j] + phi[j] * dphi[i];
                    let d_ij = 2.0 * sys.alpha2 * phi[i] * phi[j];
                    let l_ij = n_ij * inv - (n_i[i] * d_i[j] + n_i[j] * d_i[i] + n * d_ij) * inv * inv
                        + 2.0 * n * d_i[i] * d_i[j] * inv * inv * inv;
                    jacobian[(i, j)] += w * l_ij;
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                jacobian[(j, i)] = jacobian[(i, j)];
            }
        }
        Residuals {
            values,
            jacobian,
            violation: None,
        }
    }

    pub fn nu(&self, c: &[f64]) -> f64 {
        self.residuals(c).nu()
    }

    /// Control and time law along the curve on the graded breakpoints and a uniform grid.
    pub fn control_profile(&self, c: &[f64]) -> Result<ControlProfile> {
        self.check_len(c)?;
        let mut nodes: Vec<f64> = self.rule.breakpoints.iter().chain(&self.check_grid).copied().collect();
        let ascending = self.end.x > self.start.x;
        nodes.sort_by(|a, b| if ascending { a.total_cmp(b) } else { b.total_cmp(a) });
        nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-300));
        recover_control(|x| self.curve(c, x), &self.system, &nodes)
    }

    /// `∫ u² dt` of the recovered control.
    pub fn control_energy(&self, c: &[f64]) -> Result<f64> {
        Ok(self.control_profile(c)?.energy)
    }

    pub fn solve(&self, opts: &SolveOptions) -> Result<RitzSolution> {
        if opts.restarts == 0 {
            return Err(Error::invalid("at least one restart is required"));
        }
        let starts: Vec<Vec<f64>> = (0..opts.restarts)
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
                (0..self.order)
                    .map(|_| rng.random_range(-opts.init_radius..=opts.init_radius))
                    .collect()
            })
            .collect();
        self.solve_with_starts(&starts, opts)
    }

    /// Runs one local solve per start and returns the minimum-time converged candidate.
    pub fn solve_with_starts(&self, starts: &[Vec<f64>], opts: &SolveOptions) -> Result<RitzSolution> {
        if starts.is_empty() {
            return Err(Error::invalid("at least one start is required"));
        }
        for s in starts {
            self.check_len(s)?;
        }
        let run = |(k, c0): (usize, &Vec<f64>)| self.local_solve(k, c0, opts);

        #[cfg(feature = "parallel")]
        let outcomes: Vec<Outcome> = {
            use rayon::prelude::*;
            starts.par_iter().enumerate().map(run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let outcomes: Vec<Outcome> = starts.iter().enumerate().map(run).collect();

        let best_nu = outcomes.iter().map(|o| o.nu).fold(f64::INFINITY, f64::min);
        let candidates: Vec<RitzCandidate> = outcomes.into_iter().filter_map(|o| o.candidate).collect();
        let best = candidates
            .iter()
            .min_by(|a, b| a.time.total_cmp(&b.time).then(a.restart.cmp(&b.restart)))
            .cloned()
            .ok_or(Error::NoConvergence { best_nu })?;
        let profile = self.control_profile(&best.c)?;
        Ok(RitzSolution {
            order: self.order,
            trajectory: profile.to_trajectory(),
            profile,
            best,
            candidates,
        })
    }

    fn local_solve(&self, restart: usize, c0: &[f64], opts: &SolveOptions) -> Outcome {
        let lm = LmOptions {
            target_norm: opts.nu_tol * 1e-4,
            max_iter: opts.max_iter,
            ..LmOptions::default()
        };
        let eval = |c: &[f64]| {
            let r = self.residuals(c);
            let nu = r.nu();
            let mut values = r.values;
            if r.violation.is_some() {
                values.fill(nu / (self.order as f64).sqrt());
            }
            (values, r.jacobian)
        };
        let mut res = levenberg_marquardt(eval, c0, &lm);
        if !(res.value <= opts.nu_tol) {
            let nm = NelderMeadOptions {
                initial_step: 0.25,
                max_iter: opts.max_iter * 20,
                ..NelderMeadOptions::default()
            };
            let start = if res.value.is_finite() { res.x.clone() } else { c0.to_vec() };
            let simplex = nelder_mead(|c| self.nu(c), &start, &nm);
            let polish = levenberg_marquardt(eval, &simplex.x, &lm);
            if polish.value < res.value {
                res = polish;
            }
        }
        let nu = self.nu(&res.x);
        log::debug!("restart {restart}: nu = {nu:.3e} after {} iterations", res.iterations);
        let candidate = if nu <= opts.nu_tol {
            self.candidate(restart, res.x, nu)
        } else {
            None
        };
        Outcome { nu, candidate }
    }

    fn candidate(&self, restart: usize, c: Vec<f64>, nu: f64) -> Option<RitzCandidate> {
        let time = self.functional(&c).ok()?;
        match self.control_profile(&c) {
            Ok(profile) => Some(RitzCandidate {
                restart,
                c,
                nu,
                time,
                energy: profile.energy,
            }),
            Err(e) => {
                log::debug!("restart {restart}: discarded, {e}");
                None
            }
        }
    }

    fn check_len(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.order {
            return Err(Error::invalid(format!("expected {} coefficients, got {}", self.order, c.len())));
        }
        Ok(())
    }
}

struct Outcome {
    nu: f64,
    candidate: Option<RitzCandidate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub restarts: usize,
    pub seed: u64,
    pub nu_tol: f64,
    pub max_iter: usize,
    /// Half-width of the box the initial coefficients are drawn from.
    pub init_radius: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            restarts: 25,
            seed: 0,
            nu_tol: 1e-6,
            max_iter: 500,
            init_radius: 2.0,
        }
    }
}

/// A converged local solution.
#[derive(Debug, Clone, PartialEq)]
pub struct RitzCandidate {
    pub restart: usize,
    pub c: Vec<f64>,
    pub nu: f64,
    pub time: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RitzSolution {
    pub order: usize,
    pub best: RitzCandidate,
    /// Every converged candidate in restart order.
    pub candidates: Vec<RitzCandidate>,
    pub profile: ControlProfile,
    pub trajectory: Trajectory,
}

impl RitzSolution {
    pub fn travel_time(&self) -> f64 {
        self.best.time
    }

    pub fn energy(&self) -> f64 {
        self.best.energy
    }
}

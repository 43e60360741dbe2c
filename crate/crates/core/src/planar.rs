//! The reduced planar bi-linear system
//!
//! ```text
//! x' = b1 + alpha1 x - u y
//! y' = b2 + alpha2 y + u x
//! ```
//!
//! with its fixed points, uncontrolled-apogee conditions and constant-control
//! cubic.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::chimney::{ChimneyGeometry, Drift};
use crate::cubic::{CubicAnalysis, CubicVariant};
use crate::error::{Error, Result};
use crate::ode::{rk4_step, step_count};
use crate::trajectory::{Trajectory, TrajectorySample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarSystem {
    pub b1: f64,
    pub b2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

/// Which of the closed-form conditions lets the uncontrolled flow reach the apogee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DriftApogeeCase {
    /// `alpha1 = alpha2`
    EqualRates,
    /// `b1 = 0` and `2 alpha1 - alpha2 < 0`
    FirstComponentZero,
    /// `b2 = 0` and `2 alpha2 - alpha1 < 0`
    SecondComponentZero,
}

impl DriftApogeeCase {
    pub fn label(&self) -> &'static str {
        match self {
            DriftApogeeCase::EqualRates => "(1) alpha1 = alpha2",
            DriftApogeeCase::FirstComponentZero => "(2) b1 = 0, 2 alpha1 - alpha2 < 0",
            DriftApogeeCase::SecondComponentZero => "(3) b2 = 0, 2 alpha2 - alpha1 < 0",
        }
    }
}

impl PlanarSystem {
    pub fn new(b1: f64, b2: f64, alpha1: f64, alpha2: f64) -> Result<Self> {
        for (name, v) in [("b1", b1), ("b2", b2), ("alpha1", alpha1), ("alpha2", alpha2)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        if alpha1 >= 0.0 || alpha2 >= 0.0 {
            return Err(Error::invalid(format!(
                "alpha1 and alpha2 must be negative (got {alpha1}, {alpha2})"
            )));
        }
        let sys = Self {
            b1,
            b2,
            alpha1,
            alpha2,
        };
        if !sys.follows_ordering_convention() {
            log::info!("alpha2 < alpha1 convention not satisfied ({alpha1}, {alpha2})");
        }
        Ok(sys)
    }

    pub fn follows_ordering_convention(&self) -> bool {
        self.alpha2 < self.alpha1
    }

    pub fn b(&self) -> Vector2<f64> {
        Vector2::new(self.b1, self.b2)
    }

    pub fn drift_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.alpha1, 0.0, 0.0, self.alpha2)
    }

    pub fn drift(&self) -> Drift<2> {
        Drift::new(self.b(), self.drift_matrix())
    }

    pub fn rhs(&self, q: &Vector2<f64>, u: f64) -> Vector2<f64> {
        Vector2::new(
            self.b1 + self.alpha1 * q.x - u * q.y,
            self.b2 + self.alpha2 * q.y + u * q.x,
        )
    }

    pub fn purity_derivative(&self, q: &Vector2<f64>) -> f64 {
        q.x * (self.b1 + self.alpha1 * q.x) + q.y * (self.b2 + self.alpha2 * q.y)
    }

    pub fn apogee(&self) -> Result<ChimneyGeometry<2>> {
        self.drift().apogee()
    }

    pub fn endpoints(&self, eps: f64, delta: f64) -> Result<(Vector2<f64>, Vector2<f64>)> {
        self.drift().endpoints(eps, delta)
    }

    /// Fixed-step RK4 from `q0` over `[0, t_end]`, control sampled at stage times.
    pub fn integrate<F>(&self, q0: Vector2<f64>, control: F, dt: f64, t_end: f64) -> Result<Trajectory>
    where
        F: Fn(f64) -> f64,
    {
        self.integrate_from(0.0, q0, control, dt, t_end)
    }

    /// As [`integrate`](Self::integrate) but starting the clock at `t0`.
    pub fn integrate_from<F>(
        &self,
        t0: f64,
        q0: Vector2<f64>,
        control: F,
        dt: f64,
        span: f64,
    ) -> Result<Trajectory>
    where
        F: Fn(f64) -> f64,
    {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        if !(span > 0.0 && span.is_finite()) {
            return Err(Error::invalid(format!("integration span must be positive, got {span}")));
        }
        let n = step_count(span, dt);
        let h = span / n as f64;
        let rhs = |t: f64, q: &Vector2<f64>| self.rhs(q, control(t));
        let mut traj = Trajectory::new();
        let mut q = q0;
        traj.push(TrajectorySample::new(t0, q, control(t0)));
        for i in 0..n {
            let t = t0 + i as f64 * h;
            let next = rk4_step(&rhs, t, &q, h);
            let t_next = t0 + (i + 1) as f64 * h;
            if !next.iter().all(|v| v.is_finite()) {
                return Err(Error::Integration {
                    t: t_next,
                    last_state: vec![q.x, q.y],
                });
            }
            q = next;
            traj.push(TrajectorySample::new(t_next, q, control(t_next)));
        }
        Ok(traj)
    }

    /// `-B^{-1} b`, the stable equilibrium of the uncontrolled flow.
    pub fn drift_fixed_point(&self) -> Vector2<f64> {
        Vector2::new(-self.b1 / self.alpha1, -self.b2 / self.alpha2)
    }

    /// Equilibrium of the flow under constant control `u`.
    pub fn constant_control_fixed_point(&self, u: f64) -> Vector2<f64> {
        let den = u * u + self.alpha1 * self.alpha2;
        Vector2::new(
            (-self.alpha2 * self.b1 - self.b2 * u) / den,
            (-self.alpha1 * self.b2 + self.b1 * u) / den,
        )
    }

    /// Whether the uncontrolled flow converges to the apogee.
    pub fn drift_reaches_apogee(&self) -> Option<DriftApogeeCase> {
        let (a1, a2) = (self.alpha1, self.alpha2);
        if a1 == a2 {
            Some(DriftApogeeCase::EqualRates)
        } else if self.b1 == 0.0 && 2.0 * a1 - a2 < 0.0 {
            Some(DriftApogeeCase::FirstComponentZero)
        } else if self.b2 == 0.0 && 2.0 * a2 - a1 < 0.0 {
            Some(DriftApogeeCase::SecondComponentZero)
        } else {
            None
        }
    }

    /// Coefficients of the cubic whose roots are the constant controls that put
    /// the controlled equilibrium at a critical point of `g`.
    pub fn cubic_coefficients(&self, variant: CubicVariant) -> [f64; 4] {
        let (b1, b2, a1, a2) = (self.b1, self.b2, self.alpha1, self.alpha2);
        let linear_factor = match variant {
            CubicVariant::Printed => b2 - b1,
            CubicVariant::Squared => b2 * b2 - b1 * b1,
        };
        [
            b1 * b1 + b2 * b2,
            3.0 * b1 * b2 * (a2 - a1),
            2.0 * a2 * a2 * b1 * b1 + 2.0 * a1 * a1 * b2 * b2 - a1 * a2 * linear_factor,
            a1 * a2 * b1 * b2 * (a1 - a2),
        ]
    }

    pub fn constant_control_analysis(&self, variant: CubicVariant) -> Result<CubicAnalysis> {
        let [a, b, c, d] = self.cubic_coefficients(variant);
        CubicAnalysis::new(a, b, c, d)
    }
}

//! Controls and time law of a planar curve `y(x)`.
//!
//! Along a curve the radial equation fixes the speed: `dt/dx = (x + y y') / f(q)`,
//! so `x' = f / (x + y y')`, `y' = y'(x) x'`. The control is whatever rotation
//! makes the planar dynamics produce that velocity:
//!
//! ```text
//! u = (x ẏ - y ẋ - x b2 - alpha2 x y + y b1 + alpha1 x y) / (x^2 + y^2)
//! ```

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::planar::PlanarSystem;
use crate::quadrature::gauss_legendre;
use crate::trajectory::{Trajectory, TrajectorySample};

/// Minimum purity derivative accepted on a curve.
pub const CHIMNEY_TOL: f64 = 1e-12;

const PANEL_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSample {
    pub x: f64,
    pub y: f64,
    pub dy_dx: f64,
    pub t: f64,
    pub u: f64,
    pub x_dot: f64,
    pub y_dot: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlProfile {
    pub samples: Vec<ControlSample>,
    /// `∫ u^2 dt` along the curve.
    pub energy: f64,
}

impl ControlProfile {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn to_trajectory(&self) -> Trajectory {
        let mut traj = Trajectory::new();
        for s in &self.samples {
            traj.push(TrajectorySample::new(s.t, Vector2::new(s.x, s.y), s.u));
        }
        traj
    }
}

/// Pointwise quantities of a curve at `(x, y, y')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub dt_dx: f64,
    pub x_dot: f64,
    pub y_dot: f64,
    pub u: f64,
}

pub fn curve_point(system: &PlanarSystem, x: f64, y: f64, dy_dx: f64) -> Result<CurvePoint> {
    let q = Vector2::new(x, y);
    let f = system.purity_derivative(&q);
    if !(f > CHIMNEY_TOL) {
        return Err(Error::ChimneyViolation { x, f });
    }
    let radial = x + y * dy_dx;
    if radial == 0.0 || !radial.is_finite() {
        return Err(Error::NonMonotoneRadius { x });
    }
    let x_dot = f / radial;
    let y_dot = dy_dx * x_dot;
    let (b1, b2, a1, a2) = (system.b1, system.b2, system.alpha1, system.alpha2);
    let u = (x * y_dot - y * x_dot - x * b2 - a2 * x * y + y * b1 + a1 * x * y) / (x * x + y * y);
    Ok(CurvePoint {
        dt_dx: radial / f,
        x_dot,
        y_dot,
        u,
    })
}

/// Samples `u(x)` and `t(x)` on `x_nodes` (strictly monotone).
///
/// `t` is accumulated by Gauss-Legendre on each node interval; the curve must
/// stay inside the escape chimney with the radius increasing in time.
pub fn recover_control<C>(curve: C, system: &PlanarSystem, x_nodes: &[f64]) -> Result<ControlProfile>
where
    C: Fn(f64) -> (f64, f64),
{
    if x_nodes.len() < 2 {
        return Err(Error::invalid("at least two x nodes are required"));
    }
    let increasing = x_nodes[1] > x_nodes[0];
    if !x_nodes
        .windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
    {
        return Err(Error::invalid("x nodes must be strictly monotone"));
    }
    let (gx, gw) = gauss_legendre(PANEL_POINTS);
    let sample = |x: f64, t: f64| -> Result<ControlSample> {
        let (y, yp) = curve(x);
        let p = curve_point(system, x, y, yp)?;
        Ok(ControlSample {
            x,
            y,
            dy_dx: yp,
            t,
            u: p.u,
            x_dot: p.x_dot,
            y_dot: p.y_dot,
        })
    };

    let mut samples = Vec::with_capacity(x_nodes.len());
    let mut t = 0.0;
    let mut energy = 0.0;
    samples.push(sample(x_nodes[0], 0.0)?);
    for w in x_nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut dt = 0.0;
        let mut de = 0.0;
        for (xi, wi) in gx.iter().zip(&gw) {
            let x = mid + half * xi;
            let (y, yp) = curve(x);
            let p = curve_point(system, x, y, yp)?;
            let step = half * wi * p.dt_dx;
            if step <= 0.0 {
                return Err(Error::NonMonotoneRadius { x });
            }
            dt += step;
            de += step * p.u * p.u;
        }
        t += dt;
        energy += de;
        samples.push(sample(b, t)?);
    }
    Ok(ControlProfile { samples, energy })
}

/// Piecewise cubic Hermite curve `y(x)` through trajectory samples, with the
/// exact slope `ẏ/ẋ` of the dynamics at every knot.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl SampledCurve {
    pub fn from_trajectory(traj: &Trajectory, system: &PlanarSystem) -> Result<Self> {
        let mut knots: Vec<(f64, f64, f64)> = Vec::with_capacity(traj.len());
        for s in &traj.samples {
            let v = system.rhs(&s.q, s.u);
            if v.x == 0.0 {
                return Err(Error::invalid(format!("x is stationary at t = {}", s.t)));
            }
            knots.push((s.q.x, s.q.y, v.y / v.x));
        }
        if knots.len() >= 2 && knots[1].0 < knots[0].0 {
            knots.reverse();
        }
        if !knots.windows(2).all(|w| w[1].0 > w[0].0) {
            return Err(Error::invalid("trajectory is not a graph over x"));
        }
        Ok(Self {
            xs: knots.iter().map(|k| k.0).collect(),
            ys: knots.iter().map(|k| k.1).collect(),
            slopes: knots.iter().map(|k| k.2).collect(),
        })
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    /// `(y, y')` at `x`, clamped to the knot range.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let s = ((x - x0) / h).clamp(0.0, 1.0);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let y = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        let dy = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        (y, dy)
    }
}

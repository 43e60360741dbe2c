//! Fixed-step classical Runge-Kutta integration on small static vectors.

use nalgebra::SVector;

/// Default step used by every integrator in the crate.
pub const DEFAULT_DT: f64 = 1e-3;

/// One classical RK4 step of `dq/dt = rhs(t, q)`.
pub fn rk4_step<const D: usize, F>(rhs: &F, t: f64, q: &SVector<f64, D>, h: f64) -> SVector<f64, D>
where
    F: Fn(f64, &SVector<f64, D>) -> SVector<f64, D>,
{
    let half = 0.5 * h;
    let k1 = rhs(t, q);
    let k2 = rhs(t + half, &(q + k1 * half));
    let k3 = rhs(t + half, &(q + k2 * half));
    let k4 = rhs(t + h, &(q + k3 * h));
    q + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Splits `[0, span]` into `n` equal steps with `span / n <= dt`.
pub fn step_count(span: f64, dt: f64) -> usize {
    ((span / dt) - 1e-9).ceil().max(1.0) as usize
}

//! Bang-bang synthesis for the bounded problem `|u| <= 1`.
//!
//! Along an arc with `u = eps`, the switching function `<p, g(q)>` vanishes again
//! when `g(q0)` and the transported field `exp(-t ad Z)(C, 0)` evaluated at `q0`
//! become collinear, with `Z = (B + eps C, b)` and `C` the rotation generator.
//! Each switch starts a new arc with the opposite sign.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::lie::{ad_matrix, expm, AdjointMatrix, Coords, LieElement};
use crate::planar::PlanarSystem;
use crate::trajectory::{Trajectory, TrajectorySample};

/// `|Φ|` below which the bang law is undefined.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlSign {
    Plus,
    Minus,
}

impl ControlSign {
    pub fn value(self) -> f64 {
        match self {
            ControlSign::Plus => 1.0,
            ControlSign::Minus => -1.0,
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            ControlSign::Plus => 1,
            ControlSign::Minus => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ControlSign::Plus => ControlSign::Minus,
            ControlSign::Minus => ControlSign::Plus,
        }
    }
}

impl fmt::Display for ControlSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i32())
    }
}

impl FromStr for ControlSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "+1" | "+" | "plus" => Ok(ControlSign::Plus),
            "-1" | "-" | "minus" => Ok(ControlSign::Minus),
            other => Err(Error::invalid(format!("control sign must be +1 or -1, got {other:?}"))),
        }
    }
}

/// Control selected by the maximum principle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BangControl {
    Bang(ControlSign),
    /// On the switching locus `Φ = 0`.
    Undefined,
}

/// Control vector field `g(q) = (-y, x)`.
pub fn control_field(q: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-q.y, q.x)
}

/// `Φ = <p, g(q)>`.
pub fn switching_function(q: &Vector2<f64>, p: &Vector2<f64>) -> f64 {
    p.dot(&control_field(q))
}

/// `H = 1 + <p, b + B q + g(q) u>`.
pub fn pmp_hamiltonian(q: &Vector2<f64>, p: &Vector2<f64>, u: f64, system: &PlanarSystem) -> f64 {
    1.0 + p.dot(&system.rhs(q, u))
}

pub fn bang_control(q: &Vector2<f64>, p: &Vector2<f64>) -> BangControl {
    let phi = switching_function(q, p);
    if phi.abs() <= SINGULAR_TOL {
        BangControl::Undefined
    } else if phi < 0.0 {
        BangControl::Bang(ControlSign::Plus)
    } else {
        BangControl::Bang(ControlSign::Minus)
    }
}

fn determinant_of(w: &Coords, q0: &Vector2<f64>) -> f64 {
    let g = control_field(q0);
    let v = LieElement::from_coords(w).apply(q0);
    g.x * v.y - g.y * v.x
}

/// `det(g(q0), [exp(-t ad Z)(C, 0)](q0))`.
pub fn switching_determinant(t: f64, q0: &Vector2<f64>, sign: ControlSign, system: &PlanarSystem) -> f64 {
    let ad = ad_matrix(system, sign.value());
    determinant_of(&(ad.flow(t) * LieElement::rotation().coords()), q0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchOptions {
    /// Start of the search window; excludes the structural root at `t = 0`.
    pub t_min: f64,
    pub scan_step: f64,
    /// Bisection stops once the bracket is narrower than this.
    pub tol: f64,
}

impl Default for SwitchOptions {
    fn default() -> Self {
        Self {
            t_min: 1e-6,
            scan_step: 1e-3,
            tol: 1e-10,
        }
    }
}

/// First zero of the switching determinant in `(t_min, t_max]`, if any.
pub fn next_switch_time(
    q0: &Vector2<f64>,
    sign: ControlSign,
    system: &PlanarSystem,
    t_max: f64,
    opts: &SwitchOptions,
) -> Result<Option<f64>> {
    if !(opts.t_min > 0.0 && opts.t_min < t_max) {
        return Err(Error::invalid(format!(
            "search window ({}, {}] is empty",
            opts.t_min, t_max
        )));
    }
    if !(opts.scan_step > 0.0 && opts.tol > 0.0) {
        return Err(Error::invalid("scan step and tolerance must be positive"));
    }
    if q0.norm() == 0.0 {
        return Err(Error::invalid("the origin is a singular point of the switching map"));
    }
    let ad = ad_matrix(system, sign.value());
    let c = LieElement::rotation().coords();
    let step = expm(&(ad.0 * -opts.scan_step));

    let mut t_lo = opts.t_min;
    let mut w = ad.flow(t_lo) * c;
    let mut d_lo = determinant_of(&w, q0);
    if d_lo == 0.0 {
        return Ok(Some(t_lo));
    }
    while t_lo < t_max {
        let t_hi = (t_lo + opts.scan_step).min(t_max);
        w = if t_hi - t_lo == opts.scan_step {
            step * w
        } else {
            ad.flow(t_hi) * c
        };
        let d_hi = determinant_of(&w, q0);
        if d_hi == 0.0 {
            return Ok(Some(t_hi));
        }
        if d_lo.signum() != d_hi.signum() {
            return Ok(Some(bisect(&ad, q0, t_lo, d_lo, t_hi, opts.tol)));
        }
        t_lo = t_hi;
        d_lo = d_hi;
    }
    Ok(None)
}

fn bisect(ad: &AdjointMatrix, q0: &Vector2<f64>, mut a: f64, mut fa: f64, mut b: f64, tol: f64) -> f64 {
    let c = LieElement::rotation().coords();
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = determinant_of(&(ad.flow(m) * c), q0);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEvent {
    /// Absolute switching time.
    pub t: f64,
    pub q: Vector2<f64>,
    /// Duration of the arc that ends here.
    pub gap: f64,
    /// Switching determinant of that arc at the root.
    pub determinant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BangBangSchedule {
    pub initial_sign: ControlSign,
    pub switches: Vec<SwitchEvent>,
    pub horizon: f64,
}

impl BangBangSchedule {
    pub fn gaps(&self) -> Vec<f64> {
        self.switches.iter().map(|s| s.gap).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    pub dt: f64,
    pub max_switches: usize,
    pub switch: SwitchOptions,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            max_switches: 8,
            switch: SwitchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub schedule: BangBangSchedule,
    /// One trajectory per arc; consecutive arcs share their switch sample.
    pub arcs: Vec<Trajectory>,
    /// Constant `u = +1` and `u = -1` over the whole horizon.
    pub never_switch: [Trajectory; 2],
}

impl Synthesis {
    /// All arcs joined, with the shared switch samples kept once.
    pub fn trajectory(&self) -> Trajectory {
        let mut out = Trajectory::new();
        for (k, arc) in self.arcs.iter().enumerate() {
            let skip = usize::from(k > 0);
            out.samples.extend(arc.samples.iter().skip(skip).copied());
        }
        out
    }
}

/// Concatenates bang arcs from `q0`, switching at every root of the
/// switching determinant until `horizon` or `max_switches`.
pub fn synthesize(
    q0: Vector2<f64>,
    initial_sign: ControlSign,
    system: &PlanarSystem,
    horizon: f64,
    opts: &SynthesisOptions,
) -> Result<Synthesis> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    if q0.norm() > 1.0 + 1e-9 {
        return Err(Error::OutsideBall { norm: q0.norm() });
    }
    let mut switches = Vec::new();
    let mut arcs = Vec::new();
    let mut t = 0.0;
    let mut q = q0;
    let mut sign = initial_sign;
    while t < horizon {
        let remaining = horizon - t;
        let gap = if switches.len() < opts.max_switches && remaining > opts.switch.t_min {
            next_switch_time(&q, sign, system, remaining, &opts.switch)?
        } else {
            None
        };
        let span = gap.unwrap_or(remaining);
        let u = sign.value();
        let arc = system.integrate_from(t, q, |_| u, opts.dt, span)?;
        let end = *arc.last().expect("arcs have at least two samples");
        arcs.push(arc);
        match gap {
            Some(gap) => {
                let determinant = switching_determinant(gap, &q, sign, system);
                log::debug!("switch {} at t = {:.6} after {gap:.6}", switches.len() + 1, end.t);
                switches.push(SwitchEvent {
                    t: end.t,
                    q: end.q,
                    gap,
                    determinant,
                });
                t = end.t;
                q = end.q;
                sign = sign.flipped();
            }
            None => break,
        }
    }
    let never_switch = [
        system.integrate(q0, |_| 1.0, opts.dt, horizon)?,
        system.integrate(q0, |_| -1.0, opts.dt, horizon)?,
    ];
    Ok(Synthesis {
        schedule: BangBangSchedule {
            initial_sign,
            switches,
            horizon,
        },
        arcs,
        never_switch,
    })
}

/// Trajectory sample at the last recorded time `<= t`.
pub fn sample_at(traj: &Trajectory, t: f64) -> Option<TrajectorySample> {
    let i = traj.samples.partition_point(|s| s.t <= t);
    i.checked_sub(1).map(|i| traj.samples[i])
}

//! Real roots of `p(u) = a u^3 + b u^2 + c u + d` (a > 0) and the closed-form
//! conditions for a root in `[-1, 1]`.
//!
//! Roots are isolated between the critical points of `p`, where it is
//! monotone, and located by bisection to the last representable bit followed
//! by a single Newton polish.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear coefficient of the constant-control cubic: as printed, `(b2 - b1)`,
/// or with the squared difference `(b2^2 - b1^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CubicVariant {
    #[default]
    Printed,
    Squared,
}

impl std::str::FromStr for CubicVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(CubicVariant::Printed),
            "squared" => Ok(CubicVariant::Squared),
            other => Err(Error::invalid(format!("unknown cubic variant '{other}'"))),
        }
    }
}

/// The closed-form condition that fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConditionCase {
    /// `a + b + c + d = 0`: `u = 1` is a root.
    EndpointRoot,
    /// `p(-1) / p(1) <= 0`: sign change across `[-1, 1]`.
    SignChange,
    /// `p(-1) / p(1) > 0` and a critical point of `p` lies in `(-1, 1)`.
    CriticalPointInside,
    /// No condition holds.
    None,
}

impl ConditionCase {
    pub fn label(&self) -> &'static str {
        match self {
            ConditionCase::EndpointRoot => "root at u = 1: a+b+c+d = 0",
            ConditionCase::SignChange => "sign change: (-a+b-c+d)/(a+b+c+d) <= 0",
            ConditionCase::CriticalPointInside => "critical point inside: ratio > 0 and min|u+-| < 1",
            ConditionCase::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubicAnalysis {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Discriminant `4b^2 - 12ac` of `p'`.
    pub discriminant: f64,
    pub real_roots: Vec<f64>,
    pub roots_in_unit_interval: Vec<f64>,
    pub condition_case: ConditionCase,
    /// Root in `[-1, 1]` of least magnitude.
    pub selected_root: Option<f64>,
    /// Whether the closed-form conditions agree with the direct solve.
    pub conditions_agree: bool,
}

impl CubicAnalysis {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(a > 0.0) || ![b, c, d].iter().all(|v| v.is_finite()) || !a.is_finite() {
            return Err(Error::invalid("cubic requires a > 0 and finite coefficients"));
        }
        let real_roots = real_roots(a, b, c, d);
        let roots_in_unit_interval: Vec<f64> = real_roots
            .iter()
            .cloned()
            .filter(|u| (-1.0..=1.0).contains(u))
            .collect();
        let selected_root = roots_in_unit_interval
            .iter()
            .cloned()
            .min_by(|x, y| x.abs().total_cmp(&y.abs()));
        let condition_case = condition_case(a, b, c, d);
        let conditions_agree = (condition_case != ConditionCase::None) == selected_root.is_some();
        if !conditions_agree {
            log::debug!(
                "closed-form condition {:?} disagrees with direct solve for ({a}, {b}, {c}, {d})",
                condition_case
            );
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            discriminant: 4.0 * b * b - 12.0 * a * c,
            real_roots,
            roots_in_unit_interval,
            condition_case,
            selected_root,
            conditions_agree,
        })
    }

    pub fn eval(&self, u: f64) -> f64 {
        eval(self.a, self.b, self.c, self.d, u)
    }

    /// `|p(u)| / max(1, |a|, |b|, |c|, |d|)`.
    pub fn scaled_residual(&self, u: f64) -> f64 {
        let scale = [1.0, self.a.abs(), self.b.abs(), self.c.abs(), self.d.abs()]
            .into_iter()
            .fold(0.0, f64::max);
        self.eval(u).abs() / scale
    }

    /// Whether a root in `[-1, 1]` exists per the direct solve.
    pub fn has_root_in_unit_interval(&self) -> bool {
        self.selected_root.is_some()
    }
}

fn eval(a: f64, b: f64, c: f64, d: f64, u: f64) -> f64 {
    ((a * u + b) * u + c) * u + d
}

fn condition_case(a: f64, b: f64, c: f64, d: f64) -> ConditionCase {
    let at_one = a + b + c + d;
    let at_minus_one = -a + b - c + d;
    if at_one == 0.0 {
        return ConditionCase::EndpointRoot;
    }
    let ratio = at_minus_one / at_one;
    if ratio <= 0.0 {
        return ConditionCase::SignChange;
    }
    let disc = 4.0 * b * b - 12.0 * a * c;
    if disc > 0.0 {
        let s = disc.sqrt();
        let up = (-2.0 * b + s) / (6.0 * a);
        let um = (-2.0 * b - s) / (6.0 * a);
        if up.abs().min(um.abs()) < 1.0 {
            return ConditionCase::CriticalPointInside;
        }
    }
    ConditionCase::None
}

/// All distinct real roots in ascending order.
pub fn real_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let p = |u: f64| eval(a, b, c, d, u);
    let dp = |u: f64| (3.0 * a * u + 2.0 * b) * u + c;
    let scale = [a.abs(), b.abs(), c.abs(), d.abs()].into_iter().fold(0.0, f64::max);
    let bound = 1.0 + [b, c, d].iter().map(|v| v.abs() / a).fold(0.0, f64::max);

    let disc = 4.0 * b * b - 12.0 * a * c;
    let mut cuts = vec![-bound];
    if disc > 0.0 {
        let s = disc.sqrt();
        // stable quadratic formula for the critical points
        let sign = if b >= 0.0 { 1.0 } else { -1.0 };
        let q = -0.5 * (2.0 * b + sign * s);
        let (r1, r2) = if q != 0.0 { (q / (3.0 * a), c / q) } else { (-s / (6.0 * a), s / (6.0 * a)) };
        cuts.push(r1.min(r2));
        cuts.push(r1.max(r2));
    } else if disc == 0.0 {
        cuts.push(-b / (3.0 * a));
    }
    cuts.push(bound);

    let mut roots = Vec::new();
    let touch_tol = 64.0 * f64::EPSILON * scale;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (plo, phi) = (p(lo), p(hi));
        if plo == 0.0 {
            roots.push(lo);
        } else if plo.signum() != phi.signum() && phi != 0.0 {
            roots.push(bisect(&p, lo, hi));
        }
    }
    // double roots sit on a critical point without a sign change
    for &cp in &cuts[1..cuts.len() - 1] {
        if p(cp).abs() <= touch_tol && !roots.iter().any(|r| (r - cp).abs() < 1e-7 * (1.0 + cp.abs())) {
            roots.push(cp);
        }
    }
    if p(bound) == 0.0 {
        roots.push(bound);
    }
    for r in roots.iter_mut() {
        let d1 = dp(*r);
        if d1 != 0.0 {
            let polished = *r - p(*r) / d1;
            if p(polished).abs() < p(*r).abs() {
                *r = polished;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + x.abs()));
    roots
}

fn bisect(p: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let slo = p(lo).signum();
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let pm = p(mid);
        if pm == 0.0 {
            return mid;
        }
        if pm.signum() == slo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if p(lo).abs() <= p(hi).abs() {
        lo
    } else {
        hi
    }
}

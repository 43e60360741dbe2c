//! Purity-derivative geometry shared by the Bloch-ball model and its planar
//! reduction: the ellipsoid `f(q) = 0`, its radial function `g`, the apogee and
//! the boundary states of the time-minimum problem.

use nalgebra::{DMatrix, SMatrix, SVector, Vector2, Vector3};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Tolerance on eigenvalues when deciding whether `B` is negative definite.
pub const DEFINITENESS_TOL: f64 = 1e-12;

const PLANAR_GRID: usize = 4096;
const SPHERE_GRID_POLAR: usize = 256;
const SPHERE_GRID_AZIMUTH: usize = 512;

/// Affine drift `q -> b + B q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift<const D: usize> {
    pub b: SVector<f64, D>,
    pub matrix: SMatrix<f64, D, D>,
}

/// Apogee of the ellipsoid `f = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChimneyGeometry<const D: usize> {
    pub apogee: SVector<f64, D>,
    pub apogee_radius: f64,
    pub apogee_direction: SVector<f64, D>,
    /// Set when `b = 0`: every direction has `g = 0` and the apogee is the origin.
    pub degenerate: bool,
}

impl<const D: usize> Drift<D> {
    pub fn new(b: SVector<f64, D>, matrix: SMatrix<f64, D, D>) -> Self {
        Self { b, matrix }
    }

    pub fn velocity(&self, q: &SVector<f64, D>) -> SVector<f64, D> {
        self.b + self.matrix * q
    }

    /// `f(q) = <q, b + B q>`, equal to `r dr/dt` whatever the control.
    pub fn purity_derivative(&self, q: &SVector<f64, D>) -> f64 {
        q.dot(&self.velocity(q))
    }

    /// Eigenvalues of the symmetric part of `B`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = (self.matrix + self.matrix.transpose()) * 0.5;
        let dm = DMatrix::from_iterator(D, D, sym.iter().cloned());
        let mut ev: Vec<f64> = dm.symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn is_negative_definite(&self) -> bool {
        self.eigenvalues().iter().all(|&l| l < -DEFINITENESS_TOL)
    }

    fn require_negative_definite(&self) -> Result<()> {
        if self.is_negative_definite() {
            Ok(())
        } else {
            Err(Error::Model(format!(
                "B is not negative definite (eigenvalues {:?})",
                self.eigenvalues()
            )))
        }
    }

    /// Nonzero root `g(q̂) = -<q̂, b> / <q̂, B q̂>` of `r -> f(r q̂)`.
    pub fn chimney_radius(&self, direction: &SVector<f64, D>) -> Result<f64> {
        let n = direction.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("direction must be a unit vector (norm {n})")));
        }
        self.require_negative_definite()?;
        Ok(self.radius_unchecked(direction))
    }

    pub(crate) fn radius_unchecked(&self, direction: &SVector<f64, D>) -> f64 {
        -direction.dot(&self.b) / direction.dot(&(self.matrix * direction))
    }

    fn geometry_from_direction(&self, dir: SVector<f64, D>) -> Result<ChimneyGeometry<D>> {
        let radius = self.radius_unchecked(&dir);
        if radius > 1.0 + 1e-9 {
            return Err(Error::Model(format!(
                "chimney radius {radius} exceeds the unit ball"
            )));
        }
        Ok(ChimneyGeometry {
            apogee: dir * radius,
            apogee_radius: radius,
            apogee_direction: dir,
            degenerate: false,
        })
    }

    fn degenerate_geometry() -> ChimneyGeometry<D> {
        let mut e = SVector::<f64, D>::zeros();
        e[0] = 1.0;
        ChimneyGeometry {
            apogee: SVector::zeros(),
            apogee_radius: 0.0,
            apogee_direction: e,
            degenerate: true,
        }
    }

    /// Boundary states `q0 = eps b/|b|` and `q_f = (1 - delta) q_apogee`.
    pub fn endpoints_with(
        &self,
        geometry: &ChimneyGeometry<D>,
        eps: f64,
        delta: f64,
    ) -> Result<(SVector<f64, D>, SVector<f64, D>)> {
        if geometry.degenerate || self.b.norm() == 0.0 {
            return Err(Error::Model("b = 0: the initial direction is undefined".into()));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::invalid(format!("delta must lie in [0, 1), got {delta}")));
        }
        let q0 = self.b * (eps / self.b.norm());
        let qf = geometry.apogee * (1.0 - delta);
        Ok((q0, qf))
    }
}

impl Drift<2> {
    /// Unit vector at polar angle `theta`.
    pub fn direction(theta: f64) -> Vector2<f64> {
        Vector2::new(theta.cos(), theta.sin())
    }

    fn radius_at(&self, theta: f64) -> f64 {
        self.radius_unchecked(&Self::direction(theta))
    }

    fn radius_slope(&self, theta: f64) -> f64 {
        let n = Self::direction(theta);
        let dn = Vector2::new(-theta.sin(), theta.cos());
        let sym = (self.matrix + self.matrix.transpose()) * 0.5;
        let num = n.dot(&self.b);
        let den = n.dot(&(sym * n));
        let dnum = dn.dot(&self.b);
        let dden = 2.0 * dn.dot(&(sym * n));
        -(dnum * den - num * dden) / (den * den)
    }

    /// Samples of `g(theta)` on a uniform grid of `n` angles in `[0, 2π)`.
    pub fn radius_profile(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        self.require_negative_definite()?;
        Ok((0..n)
            .map(|i| {
                let th = TAU * i as f64 / n as f64;
                (th, self.radius_at(th))
            })
            .collect())
    }

    /// Maximizer of `g` over the unit circle: dense grid, then bisection on the
    /// sign of `dg/dtheta` inside the bracketing cell.
    pub fn apogee(&self) -> Result<ChimneyGeometry<2>> {
        self.require_negative_definite()?;
        if self.b.norm() == 0.0 {
            return Ok(Self::degenerate_geometry());
        }
        let h = TAU / PLANAR_GRID as f64;
        let best = (0..PLANAR_GRID)
            .map(|i| i as f64 * h)
            .max_by(|a, b| self.radius_at(*a).total_cmp(&self.radius_at(*b)))
            .expect("non-empty grid");
        let (mut lo, mut hi) = (best - h, best + h);
        if self.radius_slope(lo) > 0.0 && self.radius_slope(hi) < 0.0 {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if self.radius_slope(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
        } else {
            let (a, b) = golden_section_max(|t| self.radius_at(t), lo, hi, 1e-12);
            lo = a;
            hi = b;
        }
        let theta = 0.5 * (lo + hi);
        self.geometry_from_direction(Self::direction(theta))
    }

    pub fn endpoints(&self, eps: f64, delta: f64) -> Result<(Vector2<f64>, Vector2<f64>)> {
        let geometry = self.apogee()?;
        self.endpoints_with(&geometry, eps, delta)
    }
}

impl Drift<3> {
    pub fn direction(polar: f64, azimuth: f64) -> Vector3<f64> {
        Vector3::new(
            polar.sin() * azimuth.cos(),
            polar.sin() * azimuth.sin(),
            polar.cos(),
        )
    }

    /// Maximizer of `g` over the unit sphere: 256x512 grid in spherical
    /// coordinates, refined by Nelder-Mead on the angles.
    pub fn apogee(&self) -> Result<ChimneyGeometry<3>> {
        self.require_negative_definite()?;
        if self.b.norm() == 0.0 {
            return Ok(Self::degenerate_geometry());
        }
        let g = |p: &[f64]| self.radius_unchecked(&Self::direction(p[0], p[1]));
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..SPHERE_GRID_POLAR {
            let polar = PI * (i as f64 + 0.5) / SPHERE_GRID_POLAR as f64;
            for j in 0..SPHERE_GRID_AZIMUTH {
                let azimuth = TAU * j as f64 / SPHERE_GRID_AZIMUTH as f64;
                let v = g(&[polar, azimuth]);
                if v > best.0 {
                    best = (v, polar, azimuth);
                }
            }
        }
        let step = PI / SPHERE_GRID_POLAR as f64;
        let opts = crate::optim::NelderMeadOptions {
            initial_step: step,
            x_tol: 1e-12,
            f_tol: 1e-16,
            max_iter: 2000,
        };
        let res = crate::optim::nelder_mead(|p| -g(p), &[best.1, best.2], &opts);
        let dir = Self::direction(res.x[0], res.x[1]);
        self.geometry_from_direction(dir)
    }

    pub fn endpoints(&self, eps: f64, delta: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
        let geometry = self.apogee()?;
        self.endpoints_with(&geometry, eps, delta)
    }
}

/// Golden-section search for a maximum on `[a, b]`; returns the final bracket.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;

    fn example() -> Drift<2> {
        Drift::new(Vector2::new(1.0, 2.0), Matrix2::new(-3.0, 0.0, 0.0, -4.0))
    }

    #[test]
    fn radius_examples() {
        let d = example();
        assert!((d.chimney_radius(&Vector2::new(1.0, 0.0)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.chimney_radius(&Vector2::new(0.0, 1.0)).unwrap() - 0.5).abs() < 1e-15);
        let orth = Vector2::new(2.0, -1.0).normalize();
        assert!(d.chimney_radius(&orth).unwrap().abs() < 1e-15);
    }

    #[test]
    fn radius_rejects_indefinite_and_non_unit() {
        let d = Drift::new(Vector2::new(1.0, 2.0), Matrix2::new(-3.0, 0.0, 0.0, 1.0));
        assert!(matches!(d.chimney_radius(&Vector2::new(1.0, 0.0)), Err(Error::Model(_))));
        assert!(example().chimney_radius(&Vector2::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn planar_apogee_matches_reported_point() {
        let geo = example().apogee().unwrap();
        assert!((geo.apogee.x - 0.4079).abs() < 5e-4);
        assert!((geo.apogee.y - 0.4493).abs() < 5e-4);
        assert!(example().purity_derivative(&geo.apogee).abs() < 1e-9);
    }

    #[test]
    fn isotropic_apogee_points_along_b() {
        let b = Vector3::new(0.2, -0.1, 0.3);
        let d = Drift::new(b, nalgebra::Matrix3::identity() * -2.0);
        let geo = d.apogee().unwrap();
        assert!((geo.apogee_direction - b.normalize()).norm() < 1e-6);
        assert!((geo.apogee_radius - b.norm() / 2.0).abs() < 1e-10);
    }

    #[test]
    fn zero_b_is_degenerate() {
        let d = Drift::new(Vector2::zeros(), Matrix2::new(-3.0, 0.0, 0.0, -4.0));
        let geo = d.apogee().unwrap();
        assert!(geo.degenerate);
        assert_eq!(geo.apogee, Vector2::zeros());
        assert!(d.endpoints(1e-3, 1e-3).is_err());
    }

    #[test]
    fn endpoints_examples() {
        let d = example();
        let (q0, qf) = d.endpoints(1e-3, 1e-3).unwrap();
        let expect_q0 = Vector2::new(1.0, 2.0) * (1e-3 / 5f64.sqrt());
        assert!((q0 - expect_q0).norm() < 1e-15);
        assert!((qf.x - 0.999 * 0.4079).abs() < 5e-4);
        let geo = d.apogee().unwrap();
        let (_, qf0) = d.endpoints(1e-3, 0.0).unwrap();
        assert_eq!(qf0, geo.apogee);
        assert!(d.endpoints(0.0, 1e-3).is_err());
    }
}

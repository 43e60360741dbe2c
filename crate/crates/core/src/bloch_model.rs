//! Bloch-ball form of a two-level Lindblad system:
//! `q' = b + B q + u x q` with `A = 1/2 sum(l l̄ᵀ + l̄ lᵀ)`, `b = i sum(l x l̄)`
//! and `B = A - tr(A) I`.

use nalgebra::{Matrix2, Matrix3, SVector, Vector3};
use num_complex::Complex64;

use crate::chimney::{ChimneyGeometry, Drift};
use crate::error::{Error, Result};
use crate::ode::{rk4_step, step_count};
use crate::planar::PlanarSystem;

/// Largest tolerated imaginary residue in `A` and `b`.
pub const IMAGINARY_TOL: f64 = 1e-12;
/// Tolerance of the eigenvector test `B b = lambda b` used by the planar reduction.
pub const EIGENVECTOR_TOL: f64 = 1e-9;

pub type ComplexVector3 = nalgebra::Vector3<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladSpec {
    /// Traceless parts of the Lindblad operators in the Pauli basis.
    pub lindblad_vectors: Vec<ComplexVector3>,
    /// Traceless part of the Hamiltonian (control), angular-frequency units.
    pub control: Vector3<f64>,
}

impl LindbladSpec {
    pub fn new(lindblad_vectors: Vec<ComplexVector3>) -> Self {
        Self {
            lindblad_vectors,
            control: Vector3::zeros(),
        }
    }

    pub fn with_control(mut self, control: Vector3<f64>) -> Self {
        self.control = control;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationModel {
    pub a: Matrix3<f64>,
    pub b: Vector3<f64>,
    pub matrix: Matrix3<f64>,
    /// Number of Lindblad operators the model was built from.
    pub lindblad_count: usize,
}

/// Result of collapsing a single-operator model onto the plane containing `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarReduction {
    pub system: PlanarSystem,
    /// Columns are the new axes in original coordinates; the third is dropped.
    pub basis: Matrix3<f64>,
    /// Eigenvalue of `B` along the dropped axis.
    pub dropped_rate: f64,
}

impl PlanarReduction {
    pub fn to_planar(&self, q: &Vector3<f64>) -> nalgebra::Vector2<f64> {
        let p = self.basis.transpose() * q;
        nalgebra::Vector2::new(p.x, p.y)
    }

    pub fn from_planar(&self, q: &nalgebra::Vector2<f64>) -> Vector3<f64> {
        self.basis * Vector3::new(q.x, q.y, 0.0)
    }
}

pub fn build_dissipation(spec: &LindbladSpec) -> Result<DissipationModel> {
    if spec.lindblad_vectors.is_empty() {
        return Err(Error::invalid("at least one Lindblad vector is required"));
    }
    let mut a = nalgebra::Matrix3::<Complex64>::zeros();
    let mut b = ComplexVector3::zeros();
    for l in &spec.lindblad_vectors {
        if !l.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::invalid("Lindblad vectors must be finite"));
        }
        let lc = l.map(|z| z.conj());
        a += (l * lc.transpose() + lc * l.transpose()) * Complex64::new(0.5, 0.0);
        b += l.cross(&lc) * Complex64::i();
    }
    let residue = a.iter().chain(b.iter()).map(|z| z.im.abs()).fold(0.0, f64::max);
    if residue > IMAGINARY_TOL {
        return Err(Error::Model(format!(
            "imaginary residue {residue:e} in A or b exceeds tolerance"
        )));
    }
    let a = a.map(|z| z.re);
    let b = b.map(|z| z.re);
    let matrix = a - Matrix3::identity() * a.trace();
    Ok(DissipationModel {
        a,
        b,
        matrix,
        lindblad_count: spec.lindblad_vectors.len(),
    })
}

/// Purity `(1 + |q|^2) / 2` of a Bloch vector (planar or full).
pub fn purity<const D: usize>(q: &SVector<f64, D>) -> Result<f64> {
    let n = q.norm();
    if n > 1.0 + 1e-9 {
        return Err(Error::OutsideBall { norm: n });
    }
    Ok(0.5 * (1.0 + n * n))
}

impl DissipationModel {
    pub fn drift(&self) -> Drift<3> {
        Drift::new(self.b, self.matrix)
    }

    /// `b + B q + u x q`.
    pub fn rhs(&self, q: &Vector3<f64>, u: &Vector3<f64>) -> Vector3<f64> {
        self.b + self.matrix * q + u.cross(q)
    }

    pub fn purity_derivative(&self, q: &Vector3<f64>) -> f64 {
        self.drift().purity_derivative(q)
    }

    pub fn chimney_radius(&self, direction: &Vector3<f64>) -> Result<f64> {
        self.drift().chimney_radius(direction)
    }

    pub fn apogee(&self) -> Result<ChimneyGeometry<3>> {
        self.drift().apogee()
    }

    pub fn endpoints(&self, eps: f64, delta: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
        self.drift().endpoints(eps, delta)
    }

    /// Smallest eigenvalue of `A`; non-negative up to rounding.
    pub fn min_a_eigenvalue(&self) -> f64 {
        self.a.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `|B b - lambda b| / |b|` for the Rayleigh quotient `lambda`; zero for `b = 0`.
    pub fn eigenvector_residual(&self) -> f64 {
        let nb = self.b.norm();
        if nb == 0.0 {
            return 0.0;
        }
        let bb = self.matrix * self.b;
        let lambda = self.b.dot(&bb) / (nb * nb);
        (bb - self.b * lambda).norm() / nb
    }

    /// Fixed-step RK4 of the full Bloch dynamics under a time-dependent control.
    pub fn integrate<F>(
        &self,
        q0: Vector3<f64>,
        control: F,
        dt: f64,
        t_end: f64,
    ) -> Result<Vec<(f64, Vector3<f64>)>>
    where
        F: Fn(f64) -> Vector3<f64>,
    {
        if !(dt > 0.0) || !(t_end > 0.0) {
            return Err(Error::invalid("dt and t_end must be positive"));
        }
        let n = step_count(t_end, dt);
        let h = t_end / n as f64;
        let rhs = |t: f64, q: &Vector3<f64>| self.rhs(q, &control(t));
        let mut out = Vec::with_capacity(n + 1);
        let mut q = q0;
        out.push((0.0, q));
        for i in 0..n {
            let t = i as f64 * h;
            let next = rk4_step(&rhs, t, &q, h);
            if !next.iter().all(|v| v.is_finite()) {
                return Err(Error::Integration {
                    t: t + h,
                    last_state: q.iter().cloned().collect(),
                });
            }
            q = next;
            out.push(((i + 1) as f64 * h, q));
        }
        Ok(out)
    }

    /// Planar reduction of a single-operator model.
    ///
    /// `b` becomes the first axis (unless `B` is already diagonal with
    /// `b_3 = 0`, in which case the identity basis is kept). The second axis is
    /// the eigen-direction of `B` on `b`'s orthogonal complement, preferring
    /// `alpha2 < alpha1`. The basis is right-handed so the control about the
    /// dropped axis keeps its sign.
    pub fn reduce_to_planar(&self) -> Result<PlanarReduction> {
        if self.lindblad_count != 1 {
            return Err(Error::Reduction(format!(
                "planar reduction needs exactly one Lindblad vector, got {}",
                self.lindblad_count
            )));
        }
        let residual = self.eigenvector_residual();
        if residual > EIGENVECTOR_TOL {
            return Err(Error::Reduction(format!(
                "b is not an eigenvector of B (residual {residual:e})"
            )));
        }
        let m = &self.matrix;
        let scale = m.abs().max().max(1.0);
        let off_diag = [m[(0, 1)], m[(0, 2)], m[(1, 2)]]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        let basis = if off_diag <= 1e-12 * scale && self.b.z.abs() <= 1e-12 * self.b.norm().max(1.0) {
            Matrix3::identity()
        } else if self.b.norm() == 0.0 {
            let eig = m.symmetric_eigen();
            let mut idx = [0usize, 1, 2];
            idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
            let e1 = eig.eigenvectors.column(idx[0]).into_owned();
            let e2 = eig.eigenvectors.column(idx[1]).into_owned();
            Matrix3::from_columns(&[e1, e2, e1.cross(&e2)])
        } else {
            let e1 = self.b.normalize();
            let alpha1 = e1.dot(&(m * e1));
            // orthonormal frame of the complement
            let seed = if e1.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            let p = (seed - e1 * e1.dot(&seed)).normalize();
            let s = e1.cross(&p);
            let k = Matrix2::new(
                p.dot(&(m * p)),
                p.dot(&(m * s)),
                s.dot(&(m * p)),
                s.dot(&(m * s)),
            );
            let eig = k.symmetric_eigen();
            let (l0, l1) = (eig.eigenvalues[0], eig.eigenvalues[1]);
            let choose = |i: usize| {
                let v = eig.eigenvectors.column(i);
                (p * v[0] + s * v[1]).normalize()
            };
            // prefer an eigenvalue below alpha1, the largest such; else the largest overall
            let below: Vec<(usize, f64)> = [(0, l0), (1, l1)]
                .into_iter()
                .filter(|&(_, l)| l < alpha1)
                .collect();
            let pick = if let Some(&(i, _)) = below.iter().max_by(|a, b| a.1.total_cmp(&b.1)) {
                i
            } else if l0 >= l1 {
                0
            } else {
                1
            };
            let e2 = choose(pick);
            Matrix3::from_columns(&[e1, e2, e1.cross(&e2)])
        };
        let bt = basis.transpose() * self.b;
        let mt = basis.transpose() * m * basis;
        let system = PlanarSystem::new(bt.x, bt.y, mt[(0, 0)], mt[(1, 1)])?;
        Ok(PlanarReduction {
            system,
            basis,
            dropped_rate: mt[(2, 2)],
        })
    }
}

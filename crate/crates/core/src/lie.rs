//! The affine Lie algebra `gl2 ⋉ R^2` and the adjoint action of the drift.
//!
//! An element `(M, v)` is the affine vector field `q ↦ M q + v`. Coordinates
//! follow the basis `e1..e6 = (E11, E12, E21, E22, E1, E2)`, so a vector of
//! coordinates is `(m00, m01, m10, m11, v0, v1)`.

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};

use crate::planar::PlanarSystem;

pub type Coords = SVector<f64, 6>;
pub type Matrix6 = SMatrix<f64, 6, 6>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LieElement {
    pub m: Matrix2<f64>,
    pub v: Vector2<f64>,
}

impl LieElement {
    pub fn new(m: Matrix2<f64>, v: Vector2<f64>) -> Self {
        Self { m, v }
    }

    pub fn zero() -> Self {
        Self::new(Matrix2::zeros(), Vector2::zeros())
    }

    /// Basis element `e_{i+1}` for `i` in `0..6`.
    pub fn basis(i: usize) -> Self {
        let mut c = Coords::zeros();
        c[i] = 1.0;
        Self::from_coords(&c)
    }

    /// Rotation generator `-e2 + e3`.
    pub fn rotation() -> Self {
        Self::new(Matrix2::new(0.0, -1.0, 1.0, 0.0), Vector2::zeros())
    }

    /// Drift plus signed rotation, `(B + eps C, b)`.
    pub fn drift_with_control(system: &PlanarSystem, sign: f64) -> Self {
        Self::new(system.drift_matrix() + Self::rotation().m * sign, system.b())
    }

    pub fn coords(&self) -> Coords {
        Coords::new(self.m[(0, 0)], self.m[(0, 1)], self.m[(1, 0)], self.m[(1, 1)], self.v.x, self.v.y)
    }

    pub fn from_coords(c: &Coords) -> Self {
        Self::new(Matrix2::new(c[0], c[1], c[2], c[3]), Vector2::new(c[4], c[5]))
    }

    /// `[(A, a), (B, b)] = ([A, B], A b - B a)`.
    pub fn bracket(&self, other: &Self) -> Self {
        Self::new(
            self.m * other.m - other.m * self.m,
            self.m * other.v - other.m * self.v,
        )
    }

    /// The vector field evaluated at `q`.
    pub fn apply(&self, q: &Vector2<f64>) -> Vector2<f64> {
        self.m * q + self.v
    }
}

/// Matrix of `ad(Z)` acting on coordinate columns, `Z = (B + eps C, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointMatrix(pub Matrix6);

impl AdjointMatrix {
    /// Built from the closed form; column `i` holds the coordinates of `[Z, e_{i+1}]`.
    pub fn new(system: &PlanarSystem, sign: f64) -> Self {
        let e = sign;
        let (b1, b2, a1, a2) = (system.b1, system.b2, system.alpha1, system.alpha2);
        #[rustfmt::skip]
        let rows = Matrix6::from_row_slice(&[
            0.0, e,        e,        0.0, -b1, 0.0,
            -e,  a1 - a2,  0.0,      e,   -b2, 0.0,
            -e,  0.0,      a2 - a1,  e,   0.0, -b1,
            0.0, -e,       -e,       0.0, 0.0, -b2,
            0.0, 0.0,      0.0,      0.0, a1,  e,
            0.0, 0.0,      0.0,      0.0, -e,  a2,
        ]);
        Self(rows.transpose())
    }

    /// Built column by column from the bracket.
    pub fn from_bracket(z: &LieElement) -> Self {
        let mut m = Matrix6::zeros();
        for i in 0..6 {
            m.set_column(i, &z.bracket(&LieElement::basis(i)).coords());
        }
        Self(m)
    }

    pub fn apply(&self, elem: &LieElement) -> LieElement {
        LieElement::from_coords(&(self.0 * elem.coords()))
    }

    /// `exp(-t ad(Z))`.
    pub fn flow(&self, t: f64) -> Matrix6 {
        expm(&(self.0 * -t))
    }
}

/// `ad(Z)` for the planar system under control sign `eps`.
pub fn ad_matrix(system: &PlanarSystem, sign: f64) -> AdjointMatrix {
    AdjointMatrix::new(system, sign)
}

/// `exp(-t ad(Z)) elem`.
pub fn lie_exp_apply(t: f64, ad: &AdjointMatrix, elem: &LieElement) -> LieElement {
    LieElement::from_coords(&(ad.flow(t) * elem.coords()))
}

const SQUARING_THRESHOLD: f64 = 0.5;
const KERNEL_TERMS: usize = 18;

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(a: &Matrix6) -> Matrix6 {
    let norm = a.abs().row_sum().max();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > SQUARING_THRESHOLD {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * scale;
    // Horner form of the truncated series
    let mut result = Matrix6::identity();
    for k in (1..=KERNEL_TERMS).rev() {
        result = Matrix6::identity() + x * result / k as f64;
    }
    for _ in 0..squarings {
        result = result * result;
    }
    result
}

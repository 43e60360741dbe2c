//! Time-minimum purity control for two-level Lindblad systems on the Bloch ball.
//!
//! The crate covers the full chain from Lindblad vectors to controls:
//!
//! - [`bloch_model`]: Bloch-ball drift `b + Bq`, purity and planar reduction.
//! - [`chimney`]: the ellipsoid `f = 0`, its radial function and apogee.
//! - [`planar`]: the reduced bi-linear system, fixed points and the
//!   constant-control cubic ([`cubic`]).
//! - [`recovery`]: controls and time law recovered from a curve `y(x)`.
//! - [`ritz`]: Rayleigh-Ritz solver for unbounded controls.
//! - [`lie`] and [`bangbang`]: switching-time synthesis for `|u| <= 1`.
//! - [`io`]: model files, trajectory CSV and result JSON.

// `!(a > b)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bangbang;
pub mod bloch_model;
pub mod chimney;
pub mod cubic;
pub mod error;
pub mod io;
pub mod lie;
pub mod ode;
pub mod optim;
pub mod planar;
pub mod quadrature;
pub mod recovery;
pub mod ritz;
pub mod trajectory;

pub use bloch_model::{build_dissipation, purity, DissipationModel, LindbladSpec, PlanarReduction};
pub use chimney::{ChimneyGeometry, Drift};
pub use cubic::{CubicAnalysis, CubicVariant};
pub use error::{Error, Result};
pub use planar::PlanarSystem;
pub use trajectory::{Trajectory, TrajectorySample};

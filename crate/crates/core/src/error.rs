use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("state outside the Bloch ball: |q| = {norm}")]
    OutsideBall { norm: f64 },

    #[error("planar reduction failed: {0}")]
    Reduction(String),

    #[error("integration produced a non-finite state at t = {t}")]
    Integration { t: f64, last_state: Vec<f64> },

    #[error("curve leaves the escape chimney at x = {x} (f = {f})")]
    ChimneyViolation { x: f64, f: f64 },

    #[error("radius is not monotone along the curve at x = {x}")]
    NonMonotoneRadius { x: f64 },

    #[error("no Ritz candidate converged (best nu = {best_nu:e})")]
    NoConvergence { best_nu: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

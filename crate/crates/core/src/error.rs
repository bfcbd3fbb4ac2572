use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integration failed at t = {t}: {reason} (last good state {state:?})")]
    Integration { t: f64, state: [f64; 2], reason: String },

    #[error("CFL violation: dt = {dt} exceeds limit, suggested dt = {suggested}")]
    Cfl { dt: f64, suggested: f64 },

    #[error("vortex centers {i} and {j} collided (separation {separation})")]
    Collision { i: usize, j: usize, separation: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

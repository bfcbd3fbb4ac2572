//! Numerical laboratory for Osgood flows, propagation of singular structures
//! under linear transport, and singular vortices in 2D Euler.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod euler2d;
pub mod field;
pub mod flow;
pub mod interp;
pub mod modulus;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod seminorm;
pub mod spectral;
pub mod stability;
pub mod transport;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

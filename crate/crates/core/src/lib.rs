//! Multilinear interpolating splines on uniform grids over `[0, 1]^n`, the
//! exact worst-case errors of the spline and its mixed first derivatives on
//! modulus-of-continuity classes, and the extremal functions that attain
//! those errors.

pub mod bounds;
pub mod error;
pub mod extremal;
pub mod grid;
pub mod harness;
pub mod moduli;
pub mod spline;

pub use error::{Error, Result};

//! Wave propagation on cones: geodesic flow, spectral solutions, and
//! microlocal diagnostics of diffraction at the cone tip.

// `!(x > 0.0)` guards are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// quadrature tables are kept at their published digits
#![allow(clippy::excessive_precision)]

pub mod cli;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod microlocal;
pub mod numerics;
pub mod spectral;

pub use error::{Error, Result};

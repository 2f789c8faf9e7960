//! Travelling waves of the non-local KdV–Burgers equation
//! `τφ″ + D^α[φ] = h(φ)` with a cubic flux.

pub mod charroots;
pub mod cli;
pub mod error;
pub mod flux;
pub mod fracderiv;
pub mod integrator;
pub mod kernel;
pub mod quad;
pub mod shooter;
pub mod special;

pub use error::{Error, Result};

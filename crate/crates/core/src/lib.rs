//! Numerical core for the coupled harmonic-map / flat-metric gradient flow on tori
//! and free-boundary cylinders, with neck analysis and oracle families.

pub mod cylinder;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod neck;
pub mod oracles;
pub mod vector;

pub use error::{Error, Result};
pub use vector::AmbientVector;

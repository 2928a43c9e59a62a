//! Numerical computation with improper (σ-finite) distributions.

pub mod error;
pub mod gibbsdemo;
pub mod igmrf;
pub mod measures;
pub mod numerics;
pub mod qvague;
pub mod stone;

pub use error::{Error, Result};
pub use numerics::{Domain1D, ExtendedMass, QuadratureConfig};

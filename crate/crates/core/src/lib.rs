//! Simulator for the two-dimensional stochastic convective Brinkman-Forchheimer
//! equations with additive noise, posed on the periodic torus `[0, 2 pi)^2`.
//!
//! The core is generic over the floating-point type ([`Real`]); the aliases
//! below fix it to `f64`, which is what the experiments use.

pub mod error;
pub mod scalar;
pub mod noise;
pub mod rds;
pub mod solver;
pub mod spectral;

pub use error::{Result, ScbfError};
pub use scalar::Real;

pub type Field = spectral::SpectralField<f64>;
pub type Field32 = spectral::SpectralField<f32>;
pub type Basis = spectral::Basis<f64>;
pub type Basis32 = spectral::Basis<f32>;

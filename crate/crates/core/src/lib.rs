//! Hamiltonian Monte Carlo where the leapfrog gradient can come from a trained
//! neural network while the Metropolis test keeps the exact potential.
//!
//! Numerical code is generic over `f32` and `f64` through [`Real`]; the
//! aliases below fix the precision for common types.

pub mod data_io;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod gp_surrogate;
pub mod linalg;
pub mod nn;
pub mod numdiff;
pub mod rng;
pub mod samplers;
pub mod scalar;
pub mod targets;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Chain64 = samplers::Chain<f64>;
pub type Chain32 = samplers::Chain<f32>;
pub type MlpGradientNet64 = nn::MlpGradientNet<f64>;
pub type MlpGradientNet32 = nn::MlpGradientNet<f32>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type GpSurrogate64 = gp_surrogate::GpSurrogate<f64>;

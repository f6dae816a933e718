//! Linear and semilinear elastic waves with fractional structural damping
//! `u_tt - a²Δu - (b² - a²)∇div u + (-Δ)^θ u_t = f(u)` on ℝ³.
//!
//! The numerical core is generic over the scalar type; the aliases below fix
//! the common choices.

pub mod decay_lab;
pub mod diffusion;
pub mod error;
pub mod exponents;
pub mod linalg;
pub mod model;
pub mod propagator;
pub mod scalar;
pub mod semilinear;
pub mod symbol;

pub use error::{Error, Result};
pub use scalar::{FftReal, Real};

/// 40-significant-digit float for oracle comparisons below f64 round-off.
pub type Wide = num_bigfloat::BigFloat;

pub type Params = model::ModelParams<f64>;
pub type WideParams = model::ModelParams<Wide>;
pub type Profile = model::DataProfile<f64>;

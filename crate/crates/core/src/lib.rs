//! Numerical toolkit for the quadratic Szegő equation
//! `i ∂ₜu = 2J Π(|u|²) + conj(J) u²` on the Hardy space of the circle,
//! with `J = (u²|u)`.

pub mod certify;
pub mod compose;
pub mod dynamics;
pub mod error;
pub mod hardy;
pub mod operators;
pub mod rk4;
pub mod sampling;
pub mod steady;
pub mod traveling;
pub mod v3;

pub use error::{Error, Result};
pub use hardy::{ConservedTriple, HardyCoefficients, TwoSided, C64};

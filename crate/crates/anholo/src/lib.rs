//! Numerical engine for Lie algebroids carrying nonlinear connections.
//!
//! Every geometric quantity is evaluated pointwise on truncated Taylor jets, so
//! all partial derivatives are exact up to floating point.

pub mod algebroid;
pub mod calculus;
pub mod error;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod gravity;
pub mod hamilton;
pub mod jets;
pub mod linalg;
pub mod mechanics;
pub mod nconnection;
pub mod numeric;

pub use error::{Error, Result};
pub use field::{Field, ScalarField};
pub use jets::Jet;

//! Variable-exponent modular analysis and the Dirichlet problem for the
//! p(x)-Laplacian with possibly unbounded exponent.

pub mod energy;
pub mod error;
pub mod exponent;
pub mod expr;
pub mod grid;
pub mod inequalities;
pub mod modular;
pub mod reproduce;
pub mod solver;

pub use error::{Error, Result};

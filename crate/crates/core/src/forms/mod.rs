//! Exact polynomial and rational linear-algebra substrate.

pub mod linear;
pub mod matrix;
pub mod poly;
pub mod quadratic;
pub mod split;

pub use linear::{substitute_linear, LinearChange};
pub use matrix::RationalMatrix;
pub use poly::{IntPolynomial, Monomial};
pub use quadratic::QuadraticPolynomial;
pub use split::{FibrationMode, VariableSplit};

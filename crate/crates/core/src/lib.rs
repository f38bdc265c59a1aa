//! Exact arithmetic for the fibration method on cubic hypersurfaces:
//! polynomial algebra, finite-field counts, local densities, fibration
//! structure, lattice point counts, sieve conditions and experiment drivers.

pub mod arith;
pub mod catalog;
pub mod driver;
pub mod error;
pub mod fibration;
pub mod finite_field;
pub mod forms;
pub mod lattice;
pub mod local_density;
pub mod sieve;

pub use error::{Error, Result};

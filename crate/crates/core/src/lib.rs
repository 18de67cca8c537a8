//! Exact eigenstates of a single trapped ion driven by a laser, the driven
//! Jaynes-Cummings picture obtained by an entangling unitary, and the numerical
//! spectra used to validate them.

pub mod ansatz;
pub mod eigen;
pub mod error;
pub mod fock;
pub mod model;
pub mod spectrum;

pub use error::{Error, Result};

//! Density-matrix simulation of noisy qubit registers together with exact
//! checks of entropy-production and free-energy bounds.

pub mod channels;
pub mod error;
pub mod formats;
pub mod functionals;
pub mod linalg;
pub mod simulator;
pub mod spatial;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityMatrix};

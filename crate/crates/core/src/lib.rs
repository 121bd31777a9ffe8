//! Numerical laboratory for Morrey-type function spaces, their preduals and
//! the singular operators acting on them.

pub mod decomp;
pub mod error;
pub mod grid;
pub mod harness;
pub mod norms;
pub mod operators;
pub mod predual;
pub mod properties;
pub mod spectral;

pub use error::{LabError, Result};

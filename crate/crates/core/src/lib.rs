//! Nonclassicality and NPT-entanglement tests for multimode bosonic states
//! built from determinants of matrices of moments.

pub mod algebra;
pub mod error;
pub mod fock;
pub mod moments;
pub mod oracle;
pub mod sampling;
pub mod suites;
pub mod witness;

pub use error::{Error, Result};

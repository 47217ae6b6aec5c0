//! Averages of ratios of characteristic polynomials for chiral unitary
//! random matrix ensembles, evaluated through determinant and Pfaffian
//! factorisations and checked against brute-force oracles.

pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod microscopic;
pub mod oracles;
pub mod partition;
pub mod polynomials;
pub mod quadrature;
pub mod wilson;

pub mod cplx;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Library version recorded in provenance blocks.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

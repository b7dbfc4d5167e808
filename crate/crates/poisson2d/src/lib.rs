//! Finite element solver for the 2D Poisson equation that approximates the
//! solution and its scaled gradient simultaneously from a single coercive
//! variational problem, plus the convergence-study tooling around it.

// Quadrature constants keep their full published digits, and the assembly
// kernels walk several parallel arrays per index.
#![allow(clippy::excessive_precision, clippy::needless_range_loop)]

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod mesh;
pub mod linalg;
pub mod quadrature;
pub mod space;

pub use error::{Error, Result};

//! Numerical toolkit for the Burgers-Hilbert equation u_t + (u²/2)_x = H[u]:
//! shock-profile solvers with logarithmic correctors, a finite-volume reference
//! scheme and a validation harness.

pub mod characteristics;
pub mod correctors;
pub mod error;
pub mod function_core;
pub mod grid;
pub mod harness;
pub mod quadrature;
pub mod reference;
pub mod single_shock;
pub mod spline;
pub mod two_shock;

pub use error::{Error, Result};

//! Response densities of scalar SDEs driven by white and fractional
//! Gaussian noise, via a memory-dependent Fokker–Planck equation.
//!
//! The crate is organised bottom-up: special functions and quadrature,
//! fractional noise sampling, the SDE Monte Carlo reference, memory
//! kernels, the finite-volume solver, the Ornstein–Uhlenbeck closed form
//! and grid statistics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analytic;
pub mod error;
pub mod fgn;
pub mod fpk;
pub mod kernel;
pub mod models;
pub mod quad;
pub mod sde;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

//! Command-line experiment runner for the memory Fokker–Planck solver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;
pub mod scenario;

pub use config::{RawConfig, ScenarioConfig};
pub use error::CliError;

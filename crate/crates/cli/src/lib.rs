//! Configuration, file formats and experiment orchestration for the
//! `xva-pinn` command-line tool.
//!
//! The numerical work lives in `xva_pinn_core`; this crate reads JSON
//! experiment configs, runs training sweeps and finite-difference solves,
//! and writes checkpoints, CSV tables, JSON reports and run manifests.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use checkpoint::Checkpoint;
pub use config::ExperimentConfig;
pub use error::{CliError, Result};

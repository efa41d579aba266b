//! Experiment runner for the `vmfb-core` solvers: TOML configurations, CSV traces
//! and run summaries.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod build;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod output;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::CliError;

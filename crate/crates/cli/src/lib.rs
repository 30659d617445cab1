//! Experiment orchestration for the noisy-label tracking lab: pipeline
//! stages with a hashed manifest and caching, sweeps emitting CSV plus plot
//! descriptions, Monte Carlo theorem checks and a reproducibility report.

pub mod config;
pub mod error;
pub mod manifest;
pub mod report;
pub mod runner;
pub mod table;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use runner::Runner;

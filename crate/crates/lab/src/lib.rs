//! Experiment runner for `spdv-core`: TOML configuration, a rayon path
//! executor, atomic CSV reports and the `spdv` command line.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod report;

pub use config::ExperimentConfig;
pub use error::LabError;
pub use exec::RayonExecutor;

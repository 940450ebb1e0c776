//! Experiment orchestration for the `greenmask` binary: configs, built-in
//! targets, the simulate/reconstruct/evaluate pipeline, sweeps and manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod sweep;
pub mod targets;

pub use config::ExperimentConfig;
pub use error::CliError;

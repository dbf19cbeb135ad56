//! Configuration, orchestration and acceptance checks for the Anderson model
//! experiments in `anderson-core`.

pub mod config;
pub mod output;
pub mod runner;
pub mod verify;

pub use config::{parse_config, ConfigError, ConfigErrors, ExperimentConfig, ExperimentKind};
pub use runner::{run_experiment, RunError, RunOptions, RunSummary};

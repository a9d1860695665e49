//! Experiment harness for `vanilla-bo`: configuration, repetitions, and
//! deterministic CSV/JSON outputs.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{parse_config, parse_config_str, Command, ConfigError, ExperimentConfig};
pub use experiment::{execute, ExecutionReport, HarnessError};

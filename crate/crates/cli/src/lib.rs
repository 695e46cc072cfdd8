//! Configuration-driven experiment runner for the `gradflow` library.
//!
//! [`config`] turns a key=value or JSON file into a validated
//! [`ExperimentSpec`]; [`runner`] executes it and writes CSV/JSON artifacts.

pub mod config;
pub mod runner;

pub use config::{parse_config, ConfigError, Experiment, ExperimentSpec, Kind};
pub use runner::{run_experiment, summary_lines, Outcome, RunError};

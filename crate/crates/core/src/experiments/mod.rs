//! Configuration, orchestration and deterministic CSV artifacts.

pub mod config;
pub mod csv;
pub mod run;

pub use config::{parse_config, ConfigError, Experiment, RunConfig, Tolerances};
pub use run::{run, run_file, RunError, RunOptions, RunSummary};

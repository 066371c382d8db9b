//! Experiment orchestration for the `podd` command-line tool: declarative
//! JSON configs, replicated runs on a worker pool, CSV tables and a JSON
//! manifest.

pub mod config;
pub mod experiments;
pub mod output;
pub mod run;
pub mod suite;

pub use config::{parse_config, ConfigError, ExperimentSpec, Kind, TaggedMode};
pub use output::{Outcome, Table};
pub use run::{execute, run_experiment, RunError, RunReport, EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION};

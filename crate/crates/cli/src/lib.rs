//! Library side of the `rfharvest` command: configuration, sweeps and
//! output formats.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_bounds, cmd_sample, cmd_validate, parse_model, Report, Validation};
pub use config::{ExperimentConfig, ModelSpec};
pub use error::CliError;

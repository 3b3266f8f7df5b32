//! Command-line driver: TOML configuration, subcommand dispatch and
//! deterministic CSV and snapshot output.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig, ValidationError};
pub use run::{run, Cli, Command, RunError};

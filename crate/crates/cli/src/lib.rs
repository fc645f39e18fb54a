//! Library side of the `bcs` command-line tool: configuration loading,
//! the subcommands and the CSV/JSON writers.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::Options;
pub use config::{Experiment, RunConfig};
pub use error::{exit, CliError, CliResult, ConfigError};

//! Library side of the `flatopt` command-line tool: config parsing, run
//! records and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod record;
pub mod verify;

pub use config::Config;
pub use error::{CliError, ConfigError};
pub use record::RunRecord;

//! Library side of the `cfpose` command: experiment configs and presets,
//! seeded trials, benchmarks, image registration, and the subcommands.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod register;
pub mod trial;

pub use commands::main_with_args;
pub use error::{CliError, CliResult, ExitKind};

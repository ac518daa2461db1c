//! Library surface of the `fedhet` command: config parsing and resolution,
//! the subcommand implementations, and metrics export.

pub mod commands;
pub mod config;
pub mod output;

//! Batch front end: run configuration, subcommands and table output.

pub mod commands;
pub mod config;
pub mod output;

/// Environment variable read for the worker count when the config leaves it unset.
pub const THREADS_ENV: &str = "PLASMON_THREADS";

//! Command-line front end: configuration loading, the `solve`, `verify`,
//! `sweep` and `fiber` commands, and their artifact writers.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::Outcome;
pub use config::RunConfig;

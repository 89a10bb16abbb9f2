//! Experiment driver for `grnbat`: configuration, commands and output files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::Context;
pub use config::RunConfig;
pub use error::{CliError, Result};
pub use output::Format;

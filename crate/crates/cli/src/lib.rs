//! File formats, stage caching, reports and subcommands around `zge-core`.

pub mod cache;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod zgem;

pub use config::RunConfig;
pub use error::{CliError, CliResult};

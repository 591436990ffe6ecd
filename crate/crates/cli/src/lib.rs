//! Command implementations behind the `fdbscan` binary.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;

pub use args::Cli;
pub use commands::run;
pub use error::CliError;

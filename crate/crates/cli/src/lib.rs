//! Library side of the `spinbell` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod inequality_file;
pub mod output;

pub use commands::Outcome;
pub use error::{CliError, CliResult, ExitStatus};
pub use experiments::Run;

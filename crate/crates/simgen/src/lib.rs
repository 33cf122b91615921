//! File formats, config parsing and the command-line driver for
//! [`simgen_core`].

pub mod bench;
pub mod cli;
pub mod config_io;
pub mod error;
pub mod metadata;
pub mod reports;
pub mod table;

pub use error::{CliError, CliResult};
pub use metadata::Metadata;

//! File formats, parallel study execution and the `depkde` command line tool
//! built on [`depkde_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod input;
pub mod report;
pub mod study;

pub use depkde_core as core;
pub use error::{CliError, CliResult};

//! File formats, configuration and the command-line driver for
//! `judgebench-core`.
//!
//! Every command produces a list of [`output::Artifact`]s in memory first
//! and writes them sequentially afterwards, so identical inputs and
//! configuration give byte-identical files.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod output;

pub use commands::{produce, run, Command};
pub use config::RunConfig;
pub use error::{CliError, Result};

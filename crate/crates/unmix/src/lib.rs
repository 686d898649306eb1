//! File formats, experiment manifests and command implementations behind
//! the `unmix` binary.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod container;
pub mod error;
pub mod manifest;
pub mod render;
pub mod tables;

pub use error::{CliError, CliResult};

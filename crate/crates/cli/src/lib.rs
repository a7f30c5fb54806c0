//! Front end for the `tartar` laboratory: configuration, artifact writers,
//! plotting and the property suites behind `tartar verify`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod verify;

pub use config::RunConfig;
pub use error::{CliError, CliResult};

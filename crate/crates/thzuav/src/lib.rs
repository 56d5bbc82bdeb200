//! File formats, run orchestration and the command-line front end for the
//! `thzuav-core` simulator.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod tables;

pub use config::RunConfig;
pub use error::CliError;

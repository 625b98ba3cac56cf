//! File formats, command-line runner and language-model harness built on
//! [`govdyn_core`].

pub use govdyn_core as core;

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod llm;
pub mod output;

pub use error::CliError;

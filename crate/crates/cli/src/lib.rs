//! The `amr` command-line tool and HTTP service.

pub mod commands;
pub mod config;
pub mod error;
pub mod server;

pub use config::RunConfig;
pub use error::CliError;

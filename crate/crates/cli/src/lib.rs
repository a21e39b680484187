//! Command-line front end for the `myopic-core` library.
//!
//! Reads run configurations, drives evaluation, counterexample reproduction,
//! grid verification, random search, Monte Carlo simulation and the errata
//! checks, and renders machine-readable reports.
//!
//! Exit codes: 0 success or verified, 1 reproduction or verification
//! failure, 2 input error, 3 budget exceeded.

pub mod args;
pub mod commands;
pub mod config;
mod error;
pub mod report;

pub use args::Cli;
pub use commands::{execute, Outcome, Status};
pub use config::RunConfigDocument;
pub use error::CliError;

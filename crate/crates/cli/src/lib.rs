//! Command-line front end: CSV ingestion, JSON and table output, and a
//! parallel Monte Carlo runner on top of `scorebounds-core`.

pub mod cli;
pub mod error;
pub mod ingest;
pub mod report;
pub mod runner;

pub use error::{CliError, CliResult};

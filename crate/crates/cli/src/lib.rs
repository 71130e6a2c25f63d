//! Scenario-driven pipeline: seed, dress, verify, export.

pub mod error;
pub mod export;
pub mod pipeline;
pub mod scenario;

pub use error::{CliError, CliResult};
pub use pipeline::{execute, Options, Outcome, Stage};

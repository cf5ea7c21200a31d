//! Scenario files, command implementations and output writers for the
//! `zerosum` binary.

pub mod commands;
mod error;
pub mod output;
pub mod scenario;

pub use error::{CliError, ExitCode};
pub use scenario::{load_scenario, FamilySpec, MatrixSource, Mutation, Scenario};

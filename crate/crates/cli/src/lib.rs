//! Scenario runner for the `qfictl` binary: TOML configs, sweeps, control
//! optimization, reports and the oracle checks behind `verify`.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod scenario;
pub mod verify;

pub use config::Scenario;
pub use error::{CliError, CliResult};
pub use report::RunReport;

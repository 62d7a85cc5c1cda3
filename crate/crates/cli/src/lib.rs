//! Configuration and subcommands of the `semflow` executable.

pub mod commands;
pub mod config;

pub use commands::{run_bench, run_commsim, run_solve, run_validate_report, Overrides, SolveSummary};
pub use config::{parse_config, CommConfig, RunConfig};

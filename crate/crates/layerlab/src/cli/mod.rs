//! Batch front end: configuration, commands and run artifacts.

pub mod artifact;
pub mod commands;
pub mod config;

pub use artifact::{build_report, load_summary, run_id, Check, Report, RunArtifact, RunSummary};
pub use commands::{cmd_approx, cmd_report, cmd_scan, cmd_solve, cmd_spectrum, cmd_weyl};
pub use config::{ExperimentConfig, SCHEMA_VERSION};

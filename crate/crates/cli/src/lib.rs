//! Command-line driver for `nctc`: instance generation, single runs of the
//! completion pipeline, and the Monte Carlo experiment harness.
//!
//! Exit codes: 0 on success, 2 when initialization fails, 3 when gradient
//! descent diverges, 4 for I/O, parse and argument errors.

pub mod args;
pub mod commands;
pub mod config;
mod error;
pub mod experiment;

pub use args::Cli;
pub use config::{ExperimentConfig, ExperimentKind, GridPoint};
pub use error::{CliError, Result};
pub use experiment::{aggregate, run_experiment, run_trial, snr_slope, Aggregate, ExperimentOutput, Method, Row, Status};

//! Command-line front end: configuration, presets, runs, sweeps and fits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod presets;
pub mod sweep;

pub use config::{ExperimentConfig, Overrides};
pub use error::CliError;
pub use experiment::{run_experiment, RunOutcome, RunSummary};
pub use sweep::{run_sweep, SweepOutcome, SweepSummary};

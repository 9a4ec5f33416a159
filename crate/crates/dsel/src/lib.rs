//! Experiment runner for the differential CSI feedback library.
//!
//! `dsel <experiment> --config <path> [--seed N] [--out <path>]` loads a
//! flat `key = value` config, runs one of `mse_surface`, `rate_surface`,
//! `rate_section` or `capacity`, and writes a CSV whose first line is a
//! `#` comment echoing the resolved configuration.

pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

pub use config::{Experiment, ExperimentConfig, Grid};
pub use error::{ConfigError, RunError};
pub use experiments::{
    capacity_points, capacity_setup, capacity_table, run, run_capacity, run_mse_surface, run_rate_section, run_rate_surface,
    CapacityPoint,
};
pub use table::{Cell, CsvTable};

use std::io::Write;

/// Runs the experiment and writes the CSV, with the config echo, to `out`.
pub fn run_to<W: Write>(cfg: &ExperimentConfig, out: W) -> Result<(), RunError> {
    let table = run(cfg)?;
    table.write(&cfg.echo(), out)
}

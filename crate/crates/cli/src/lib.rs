//! Command-line front end: scenario ingestion, method dispatch, trade-off
//! sweeps and machine-readable CSV/JSON tables.

pub mod args;
pub mod output;
pub mod run;

pub use args::{Cli, Command, OutputFormat};
pub use output::{
    beampattern_to_csv, beampattern_to_json, parse_sweep_csv, sweep_to_csv, sweep_to_json,
    BeampatternRow, SweepRow, SCHEMA_VERSION,
};
pub use run::{
    beampattern_rows, run, run_cell, run_sweep, CliError, SweepSpec, EXIT_BUDGET, EXIT_OK,
    EXIT_PARTIAL, EXIT_USAGE, EXIT_VALIDATION,
};

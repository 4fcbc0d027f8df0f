//! Command-line interface definition.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isac_core::Method;

pub fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(
    name = "isac-select",
    version,
    about = "Joint antenna selection and transmit covariance optimization for ISAC transmitters"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve one (method, mu) instance and emit a one-row result table.
    Solve(SolveArgs),
    /// Run a (mu x method x seed) sweep and emit the trade-off table.
    Sweep(SweepArgs),
    /// Solve one instance and export the beampattern over the angular grid.
    Beampattern(BeampatternArgs),
    /// Parse and validate a scenario file.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Optimize the rate alone, dropping the sensing term.
    #[arg(long)]
    pub rate_only: bool,
    /// Maximum number of subsets the exhaustive search may enumerate.
    #[arg(long, default_value_t = isac_core::DEFAULT_ES_BUDGET as u64)]
    pub es_budget: u64,
    /// Suppress the generated-at header line and zero the wall-time column
    /// so identical runs produce byte-identical output.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trade-off parameter; defaults to the scenario's first value.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Selection method.
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    /// Channel seed override.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trade-off values, comma separated; defaults to the scenario list.
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    /// Methods to run, comma separated (dp, es, ula).
    #[arg(long, value_delimiter = ',', value_parser = parse_method, required = true)]
    pub method: Vec<Method>,
    /// Channel seeds, comma separated; defaults to the scenario channel.
    #[arg(long, value_delimiter = ',')]
    pub seed: Option<Vec<u64>>,
}

#[derive(Args, Debug)]
pub struct BeampatternArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trade-off parameter; defaults to the scenario's first value.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Selection method.
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    /// Channel seed override.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Emit power columns in decibels.
    #[arg(long)]
    pub db: bool,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
}

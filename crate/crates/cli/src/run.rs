//! Subcommand execution: scenario loading, per-cell dispatch, sweep
//! orchestration and output emission.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use chrono::{SecondsFormat, Utc};
use rayon::prelude::*;
use serde::Serialize;

use isac_core::{
    beampattern_over_grid, dp_select, exhaustive_search, fixed_ula_baseline, ula_scenario,
    Error as CoreError, Method, Scenario, SelectionResult, SolverConfig, TradeoffPoint,
};

use crate::args::{BeampatternArgs, Cli, Command, CommonArgs, OutputFormat, SolveArgs, SweepArgs, ValidateArgs};
use crate::output::{
    beampattern_to_csv, beampattern_to_json, sweep_to_csv, sweep_to_json, BeampatternRow,
    SweepRow, SCHEMA_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_PARTIAL: i32 = 5;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(CoreError),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(CoreError::BudgetExceeded { .. }) => EXIT_BUDGET,
            CliError::Core(_) => EXIT_VALIDATION,
            CliError::Io(_) => 1,
        }
    }
}

/// Sweep request: the cell grid plus solver and output options.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub mu_values: Vec<f64>,
    pub methods: Vec<Method>,
    /// `None` runs the scenario channel as loaded from the file.
    pub seeds: Vec<Option<u64>>,
    pub rate_only: bool,
    pub es_budget: u128,
    /// Zero the wall-time column for byte-identical reruns.
    pub zero_wall_time: bool,
}

fn seed_column(scenario: &Scenario, seed: Option<u64>) -> i64 {
    seed.or(scenario.channel_seed())
        .map(|s| s as i64)
        .unwrap_or(-1)
}

/// Runs one `(mu, method, seed)` cell.
pub fn run_cell(
    scenario: &Scenario,
    mu: f64,
    method: Method,
    seed: Option<u64>,
    rate_only: bool,
    es_budget: u128,
    zero_wall_time: bool,
) -> Result<(TradeoffPoint, SelectionResult), CoreError> {
    let base = match seed {
        Some(s) => scenario.with_seed(s)?,
        None => scenario.clone(),
    };
    let sc = base.with_mu(mu)?;
    let cfg = SolverConfig::for_power(sc.power()).with_rate_only(rate_only);
    let started = Instant::now();
    let result = match method {
        Method::Dp => dp_select(&sc, &cfg)?,
        Method::Es => exhaustive_search(&sc, &cfg, es_budget)?,
        Method::Ula => fixed_ula_baseline(&sc, &cfg)?,
    };
    let wall_time_s = if zero_wall_time {
        0.0
    } else {
        started.elapsed().as_secs_f64()
    };
    let b = &result.inner.breakdown;
    let point = TradeoffPoint {
        mu,
        method,
        seed: seed_column(scenario, seed),
        rate_bpcu: b.rate_bpcu,
        beampattern_mse: b.mse_term,
        cross_corr: b.cross_corr_term,
        objective: b.scalarized,
        wall_time_s,
        inner_solves: result.inner_solve_count,
    };
    Ok((point, result))
}

/// Runs every cell of the grid. Failing cells become failed rows and the
/// sweep continues; rows come back sorted by `(mu, method, seed)`.
pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec) -> Result<Vec<SweepRow>, CliError> {
    if spec.mu_values.is_empty() {
        return Err(CliError::Usage("the mu list must not be empty".into()));
    }
    if spec.methods.is_empty() {
        return Err(CliError::Usage("at least one method is required".into()));
    }
    if spec.seeds.is_empty() {
        return Err(CliError::Usage("at least one seed cell is required".into()));
    }

    let mut mu_values = spec.mu_values.clone();
    mu_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    mu_values.dedup();
    let mut methods = spec.methods.clone();
    methods.sort();
    methods.dedup();
    let mut seeds = spec.seeds.clone();
    seeds.sort();
    seeds.dedup();

    let mut cells = Vec::new();
    for &mu in &mu_values {
        for &method in &methods {
            for &seed in &seeds {
                cells.push((mu, method, seed));
            }
        }
    }

    let rows: Vec<SweepRow> = cells
        .into_par_iter()
        .map(|(mu, method, seed)| {
            match run_cell(
                scenario,
                mu,
                method,
                seed,
                spec.rate_only,
                spec.es_budget,
                spec.zero_wall_time,
            ) {
                Ok((point, _)) => SweepRow::Ok(point),
                Err(e) => SweepRow::Failed {
                    mu,
                    method,
                    seed: seed_column(scenario, seed),
                    message: e.to_string(),
                },
            }
        })
        .collect();
    Ok(rows)
}

/// Exported beampattern: `(theta, P(theta), alpha * P_d(theta))` over the
/// grid of the scenario the result was solved on (pass the reduced-array
/// scenario for the fixed-array baseline).
pub fn beampattern_rows(
    result: &SelectionResult,
    scenario: &Scenario,
) -> Result<Vec<BeampatternRow>, CoreError> {
    let pattern = beampattern_over_grid(
        &result.p,
        &result.inner.covariance,
        scenario.geometry(),
        scenario.desired(),
    )?;
    let alpha = result.inner.alpha;
    Ok(scenario
        .desired()
        .angles_deg()
        .iter()
        .zip(pattern)
        .zip(scenario.desired().values())
        .map(|((&theta_deg, power), pd)| BeampatternRow {
            theta_deg,
            power,
            desired_scaled: alpha * pd,
        })
        .collect())
}

fn timestamp(common: &CommonArgs) -> Option<String> {
    (!common.no_timestamp).then(|| Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true))
}

fn emit(common: &CommonArgs, text: &str) -> Result<(), CliError> {
    match &common.out {
        Some(path) => std::fs::write(path, text).map_err(CliError::Io),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(CliError::Io)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, CliError> {
    Scenario::from_path(path).map_err(CliError::Core)
}

#[derive(Serialize)]
struct SolveReport {
    schema: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated: Option<String>,
    point: TradeoffPoint,
    /// 0-based antenna index per RF chain.
    selection: Vec<usize>,
    /// 0-based active antennas, sorted.
    support: Vec<usize>,
    alpha: f64,
    converged: bool,
    iterations: usize,
    projected_grad_norm: f64,
    duplicate_warning: bool,
}

fn cmd_solve(args: &SolveArgs) -> Result<i32, CliError> {
    let scenario = load(&args.common.scenario)?;
    let mu = args.mu.unwrap_or(scenario.mu());
    let (point, result) = run_cell(
        &scenario,
        mu,
        args.method,
        args.seed,
        args.common.rate_only,
        args.common.es_budget as u128,
        args.common.no_timestamp,
    )?;
    eprintln!(
        "{} mu={} seed={}: objective {:.6e}, rate {:.4} bpcu, beampattern mse {:.6e}, support {:?}{}",
        args.method,
        mu,
        point.seed,
        point.objective,
        point.rate_bpcu,
        point.beampattern_mse,
        result.support(),
        if result.duplicate_warning {
            " (duplicate chain assignments)"
        } else {
            ""
        }
    );
    let text = match args.common.format {
        OutputFormat::Csv => sweep_to_csv(&[SweepRow::Ok(point)], timestamp(&args.common).as_deref()),
        OutputFormat::Json => {
            let report = SolveReport {
                schema: SCHEMA_VERSION,
                generated: timestamp(&args.common),
                point,
                selection: result.selection.clone(),
                support: result.support().to_vec(),
                alpha: result.inner.alpha,
                converged: result.inner.converged,
                iterations: result.inner.iterations,
                projected_grad_norm: result.inner.projected_grad_norm,
                duplicate_warning: result.duplicate_warning,
            };
            serde_json::to_string_pretty(&report).expect("report serialization")
        }
    };
    emit(&args.common, &text)?;
    Ok(EXIT_OK)
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32, CliError> {
    let scenario = load(&args.common.scenario)?;
    let mu_values = match &args.mu {
        Some(list) => list.clone(),
        None => scenario.mu_sweep().to_vec(),
    };
    let seeds: Vec<Option<u64>> = match &args.seed {
        Some(list) => list.iter().map(|&s| Some(s)).collect(),
        None => vec![None],
    };
    let spec = SweepSpec {
        mu_values,
        methods: args.method.clone(),
        seeds,
        rate_only: args.common.rate_only,
        es_budget: args.common.es_budget as u128,
        zero_wall_time: args.common.no_timestamp,
    };
    let rows = run_sweep(&scenario, &spec)?;
    let text = match args.common.format {
        OutputFormat::Csv => sweep_to_csv(&rows, timestamp(&args.common).as_deref()),
        OutputFormat::Json => sweep_to_json(&rows, timestamp(&args.common).as_deref()),
    };
    emit(&args.common, &text)?;
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed", rows.len());
        return Ok(EXIT_PARTIAL);
    }
    Ok(EXIT_OK)
}

fn cmd_beampattern(args: &BeampatternArgs) -> Result<i32, CliError> {
    let scenario = load(&args.common.scenario)?;
    let mu = args.mu.unwrap_or(scenario.mu());
    let (_, result) = run_cell(
        &scenario,
        mu,
        args.method,
        args.seed,
        args.common.rate_only,
        args.common.es_budget as u128,
        args.common.no_timestamp,
    )?;
    // the baseline solves on the reduced array, so evaluate there too
    let eval_scenario = match args.method {
        Method::Ula => ula_scenario(&scenario)?,
        _ => scenario,
    };
    let eval_scenario = eval_scenario.with_mu(mu)?;
    let rows = beampattern_rows(&result, &eval_scenario)?;
    let text = match args.common.format {
        OutputFormat::Csv => {
            beampattern_to_csv(&rows, args.db, timestamp(&args.common).as_deref())
        }
        OutputFormat::Json => {
            beampattern_to_json(&rows, args.db, timestamp(&args.common).as_deref())
        }
    };
    emit(&args.common, &text)?;
    Ok(EXIT_OK)
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32, CliError> {
    let scenario = load(&args.scenario)?;
    println!(
        "scenario ok: N={} K={} M={} G={} Q={} power={} noise={} mu={:?} channel={}",
        scenario.num_antennas(),
        scenario.num_rf_chains(),
        scenario.channel().num_ue_antennas(),
        scenario.desired().num_grid_points(),
        scenario.desired().num_targets(),
        scenario.power(),
        scenario.channel().noise_variance(),
        scenario.mu_sweep(),
        match scenario.channel_seed() {
            Some(seed) => format!("seed {seed}"),
            None => "explicit".into(),
        }
    );
    Ok(EXIT_OK)
}

/// Dispatches a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Beampattern(args) => cmd_beampattern(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

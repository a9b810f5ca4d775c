//! Command-line front end: argument parsing, config files, CSV and report
//! output, exit codes.

// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use hjmm_colloc::{Error, Execution};

use commands::{
    CapletPriceArgs, CapletSurfaceArgs, CheckAssumptionArgs, KernelTableArgs, Outcome, SimulateArgs, VasicekRmseArgs,
};
use config::{ConfigError, ExperimentConfig};
use report::{config_hash, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Tables above this size are not repeated row by row in the report.
const REPORT_ROW_LIMIT: usize = 10_000;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Usage(String),
    Numerical(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Config(e) => json!({
                "error": "config",
                "violations": e.violations.iter()
                    .map(|v| json!({"key": v.key, "message": v.message}))
                    .collect::<Vec<_>>(),
            }),
            CliError::Usage(m) => json!({"error": "config", "message": m}),
            CliError::Numerical(e) => json!({"error": "numerical", "message": e.to_string()}),
            CliError::Io(m) => json!({"error": "io", "message": m}),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Mismatch(_) | Error::KernelOrder { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "hjmm", version, about = "Kernel collocation for forward-rate SPDEs")]
pub struct Cli {
    /// Maximum number of worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Write a JSON run report to this file.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate a Wendland kernel or one of its derivatives.
    KernelTable(KernelTableArgs),
    /// Tabulate the cardinal-function diagnostic against its bound.
    CheckAssumption(CheckAssumptionArgs),
    /// Simulate paths from a TOML experiment file.
    Simulate(SimulateArgs),
    /// Root-mean-square error against the exact Vasicek solution.
    VasicekRmse(VasicekRmseArgs),
    /// Monte Carlo price of one caplet.
    CapletPrice(CapletPriceArgs),
    /// Caplet prices over a grid of volatility parameters.
    CapletSurface(CapletSurfaceArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::KernelTable(_) => "kernel-table",
            Command::CheckAssumption(_) => "check-assumption",
            Command::Simulate(_) => "simulate",
            Command::VasicekRmse(_) => "vasicek-rmse",
            Command::CapletPrice(_) => "caplet-price",
            Command::CapletSurface(_) => "caplet-surface",
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(ExperimentConfig::parse(&text)?)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if cli.workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let exec = match cli.workers {
        Some(w) => Execution::with_workers(w),
        None => Execution::default(),
    };
    let started = Instant::now();
    let mut report_path = cli.report.clone();
    let (outcome, out): (Outcome, PathBuf) = match &cli.command {
        Command::KernelTable(a) => (commands::kernel_table(a)?, a.out.clone()),
        Command::CheckAssumption(a) => (commands::check_assumption(a, exec)?, a.out.clone()),
        Command::Simulate(a) => {
            let cfg = load_config(&a.config)?;
            let out = a
                .out
                .clone()
                .or_else(|| cfg.output.paths.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("paths.csv"));
            if report_path.is_none() {
                report_path = cfg.output.report.as_ref().map(PathBuf::from);
            }
            (commands::simulate(&cfg, exec)?, out)
        }
        Command::VasicekRmse(a) => (commands::vasicek_rmse(a, exec)?, a.out.clone()),
        Command::CapletPrice(a) => (commands::caplet_price(a, exec)?, a.out.clone()),
        Command::CapletSurface(a) => (commands::caplet_surface_cmd(a, exec)?, a.out.clone()),
    };

    let hash = config_hash(&outcome.config);
    let file = File::create(&out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    outcome
        .table
        .write_csv(BufWriter::new(file), &hash)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", out.display())))?;

    if let Some(path) = report_path {
        let report = Report {
            subcommand: cli.command.name(),
            config: &outcome.config,
            hash: &hash,
            table: &outcome.table,
            echo_rows: outcome.table.rows.len() <= REPORT_ROW_LIMIT,
            output: &out,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        };
        report
            .write(&path)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

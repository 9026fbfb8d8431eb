//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical or domain error,
//! 3 I/O error.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::error::{BridgeError, Result};
use crate::estimators;
use crate::experiments::{self, ExperimentSpec, RunOptions};
use crate::model::{self, BridgeParams, TimeGrid};
use crate::pathio;
use crate::samplers::{self, SamplerKind, SeedSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "alpha-bridge",
    version,
    about = "Simulation and inference for alpha-Wiener bridges"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one path and write it as CSV
    Sample(SampleArgs),
    /// Estimate alpha and sigma^2 from a path CSV
    Estimate(EstimateArgs),
    /// Print closed-form values
    Table(TableArgs),
    /// Run an experiment spec and write its summary JSON
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("grid").required(true).args(["steps", "geometric"])))]
struct SampleArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    sigma: f64,
    /// Terminal time T
    #[arg(long, allow_hyphen_values = true)]
    horizon: f64,
    /// Number of equal steps over [0, t-end]
    #[arg(long)]
    steps: Option<usize>,
    /// Geometric grid T - T*R^k accumulating at T
    #[arg(long, value_name = "R", allow_hyphen_values = true)]
    geometric: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    method: Method,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Joint,
    Euler,
}

impl From<Method> for SamplerKind {
    fn from(m: Method) -> Self {
        match m {
            Method::Exact => SamplerKind::Exact,
            Method::Joint => SamplerKind::Joint,
            Method::Euler => SamplerKind::Euler,
        }
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "horizon-T", allow_hyphen_values = true)]
    horizon_t: f64,
    /// Observation time; defaults to the last grid point
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Quantity {
    Cov,
    Var,
    Qv,
    Envelope,
    LimitVar,
}

#[derive(Debug, Args)]
struct TableArgs {
    #[arg(long, value_enum)]
    what: Quantity,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    /// One or more times; one output line each
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    t: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    horizon: f64,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    threads: Option<usize>,
    /// Directory for per-replicate path CSVs
    #[arg(long)]
    dump_paths: Option<PathBuf>,
}

pub fn exit_code(err: &BridgeError) -> i32 {
    match err {
        BridgeError::Argument(_) => EXIT_USAGE,
        BridgeError::Io { .. } | BridgeError::Parse { .. } => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("usage error");
            eprintln!("{line}");
            return EXIT_USAGE;
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Sample(a) => sample(a),
        Command::Estimate(a) => estimate(a),
        Command::Table(a) => table(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn sample(a: SampleArgs) -> Result<()> {
    let params = BridgeParams::new(a.alpha, a.sigma, a.horizon)?;
    let grid = match (a.steps, a.geometric) {
        (Some(n), None) => TimeGrid::uniform(a.t_end, n)?,
        (None, Some(r)) => TimeGrid::geometric(a.horizon, r, a.t_end)?,
        _ => unreachable!("clap enforces exactly one grid flag"),
    };
    let path = samplers::sample(a.method.into(), &params, &grid, SeedSpec::new(a.seed, a.replicate))?;
    pathio::write_path_csv(&path, &a.out)
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let path = pathio::read_path_csv(&a.input, a.horizon_t)?;
    let report = estimators::estimate(&path, a.t)?;
    let value = serde_json::to_value(report).expect("report serializes");
    print!("{}", experiments::to_canonical_string(&value));
    Ok(())
}

fn table(a: TableArgs) -> Result<()> {
    let need = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| BridgeError::Argument(format!("--what {:?} requires --{name}", a.what).to_lowercase()))
    };
    let times = || -> Result<&[f64]> {
        if a.t.is_empty() {
            Err(BridgeError::Argument("this table requires --t".into()))
        } else {
            Ok(&a.t)
        }
    };
    let values: Vec<f64> = match a.what {
        Quantity::Cov => {
            let beta = need("beta", a.beta)?;
            let s = need("s", a.s)?;
            times()?
                .iter()
                .map(|&t| model::covariance(a.alpha, beta, s, t, a.horizon))
                .collect::<Result<_>>()?
        }
        Quantity::Var => times()?
            .iter()
            .map(|&t| model::variance(a.alpha, t, a.horizon))
            .collect::<Result<_>>()?,
        Quantity::Qv => times()?
            .iter()
            .map(|&t| model::rescaled_qv(a.alpha, t, a.horizon))
            .collect::<Result<_>>()?,
        Quantity::Envelope => times()?
            .iter()
            .map(|&t| model::lil_envelope(a.alpha, t, a.horizon))
            .collect::<Result<_>>()?,
        Quantity::LimitVar => vec![model::limit_variance(a.alpha, a.horizon)?],
    };
    for v in values {
        println!("{v}");
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let spec = ExperimentSpec::load(&a.spec)?;
    let options = RunOptions { dump_dir: a.dump_paths };
    let summary = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| BridgeError::Argument(format!("--threads: {e}")))?
            .install(|| experiments::run_experiment_with(&spec, &options))?,
        None => experiments::run_experiment_with(&spec, &options)?,
    };
    experiments::persist_summary(&summary, &a.out)?;
    let passed = summary.checks.iter().filter(|c| c.passed).count();
    println!(
        "{}: passed={} checks={}/{} failures={} wall={:.2}s",
        summary.kind.name(),
        summary.passed,
        passed,
        summary.checks.len(),
        summary.failures,
        summary.wall_clock_seconds
    );
    Ok(())
}

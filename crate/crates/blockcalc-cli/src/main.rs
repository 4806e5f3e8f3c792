//! Command-line front end: model queries, one-off simulations, latency
//! fitting, and preset experiment bundles that emit CSV data plus
//! matplotlib plot scripts.

mod plot;
mod run;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Top-level error split by exit code: configuration problems (bad flags,
/// invalid spec files, impossible parameter combinations) exit with 2,
/// data problems (unreadable or malformed input files, degenerate fits)
/// exit with 3.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<blockcalc::Error> for CliError {
    fn from(err: blockcalc::Error) -> Self {
        use blockcalc::Error;
        match err {
            Error::Parse { .. }
            | Error::Io(_)
            | Error::DegenerateFit(_)
            | Error::InsufficientSamples { .. } => CliError::Data(err.to_string()),
            _ => CliError::Config(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "blockcalc",
    version,
    about = "Block-creation design calculator and transaction-conflict simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Evaluate the analytical models directly
    #[command(subcommand)]
    Model(ModelCommand),
    /// Simulate one configuration and print its percentile band
    Simulate(SimulateArgs),
    /// Run a named preset or a TOML experiment spec
    Experiment(ExperimentArgs),
    /// Fit latency coefficients to a measurement file
    Fit(FitArgs),
    /// Overlap area between forward and reversed key distributions
    Overlap(OverlapArgs),
}

#[derive(Subcommand)]
pub enum ModelCommand {
    /// Modeled block success rate for an access pattern
    Success(SuccessArgs),
    /// Expected average transaction latency from fitted coefficients
    Latency(LatencyArgs),
}

/// Orientation of a ranged Zipfian key distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistKind {
    Forward,
    Reversed,
}

#[derive(Args)]
pub struct SuccessArgs {
    /// Zipf skewness parameter (must exceed 1)
    #[arg(long, default_value_t = 1.03)]
    pub alpha: f64,
    /// Number of keys in each distribution
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    pub range: u32,
    /// Block size
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    pub bs: u32,
    /// Read probability RP (write probability is 1 - RP)
    #[arg(long, default_value_t = 0.5)]
    pub rp: f64,
    /// Read-key distribution orientation
    #[arg(long, value_enum, default_value_t = DistKind::Forward)]
    pub read_dist: DistKind,
    /// Write-key distribution orientation
    #[arg(long, value_enum, default_value_t = DistKind::Forward)]
    pub write_dist: DistKind,
}

#[derive(Args)]
pub struct LatencyArgs {
    /// Block size BS
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    pub bs: u32,
    /// Batch timeout BTO in seconds
    #[arg(long, default_value_t = 2.0)]
    pub bto: f64,
    /// Transaction arrival rate R in transactions/second
    #[arg(long, default_value_t = 8.0)]
    pub rate: f64,
    /// Fitted per-transaction coefficient c0 (seconds per slot)
    #[arg(long)]
    pub c0: f64,
    /// Fitted fixed coefficient c1 (seconds)
    #[arg(long)]
    pub c1: f64,
    /// Peer block-processing rate; when given, a saturation diagnostic is printed
    #[arg(long)]
    pub bp_rate: Option<f64>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Case study: 1 = all-write, 2 = read-then-write with retry, 3 = split read/write
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub case: u8,
    /// Zipf skewness parameter
    #[arg(long, default_value_t = 1.03)]
    pub alpha: f64,
    /// Number of keys
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    pub range: u32,
    /// Block size
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    pub bs: u32,
    /// Read probability (case 3 only)
    #[arg(long, default_value_t = 0.5)]
    pub rp: f64,
    /// Number of independent trials
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
    pub trials: u32,
    /// Validated operations per trial
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub ops: u64,
    /// Master seed
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Client population (default: max(bs, 16))
    #[arg(long)]
    pub clients: Option<u32>,
    /// Also run one traced trial with the master seed and write its blocks here
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args)]
pub struct ExperimentArgs {
    /// Preset name (fig8, fig9, fig11, table3, fig1) or path to a TOML spec
    pub target: String,
    /// Output directory (overrides the spec)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides the spec)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trials per sweep point (overrides the spec)
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub trials: Option<u32>,
    /// Validated operations per trial (overrides the spec)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub ops: Option<u64>,
}

#[derive(Args)]
pub struct FitArgs {
    /// Measurement file with header bs,bto_seconds,arrival_rate,measured_latency_seconds
    pub file: PathBuf,
    /// Peer block-processing rate; when given, each row gets a saturation flag
    #[arg(long)]
    pub bp_rate: Option<f64>,
    /// Write the per-row table here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct OverlapArgs {
    /// Zipf skewness parameter
    #[arg(long, default_value_t = 1.03)]
    pub alpha: f64,
    /// Number of keys
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    pub range: u32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

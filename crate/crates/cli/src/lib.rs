//! `aldsat` command-line driver.
//!
//! Every subcommand resolves its settings from flags, then an optional JSON
//! config file, then built-in defaults, and writes a manifest next to its
//! outputs.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, or inputs that do not fit together.
    Usage(String),
    Internal(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Internal(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Internal(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Parser)]
#[command(name = "aldsat", version, about = "Predict ALD saturation dose times from growth profiles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a dataset of growth profiles.
    Generate(GenerateArgs),
    /// Train a network on a dataset.
    Train(TrainArgs),
    /// Score a trained network on a test set.
    Evaluate(EvaluateArgs),
    /// Accuracy as a function of the number of thickness points.
    SweepPoints(SweepPointsArgs),
    /// Accuracy as a function of hidden-layer width.
    SweepWidth(SweepWidthArgs),
    /// Datasets, models, scatters, sweeps and a metric summary in one run.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args, Default, Clone)]
pub struct CommonArgs {
    /// JSON config file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for generation and sweep cells.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct DataArgs {
    /// Seed for process sampling (test sets use seed + 1).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Deposition zone length, m.
    #[arg(long)]
    pub length: Option<f64>,
    /// Tube radius, m.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Carrier gas velocity, m/s.
    #[arg(long)]
    pub gas_velocity: Option<f64>,
    /// Coverage that counts as saturated.
    #[arg(long)]
    pub theta_sat: Option<f64>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct TrainingArgs {
    /// Training seed (initialization and shuffling).
    #[arg(long)]
    pub train_seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Thickness points per profile: 4, 5, 8, 10, 16 or 20.
    #[arg(long)]
    pub points: Option<usize>,
    /// Accept point counts outside the standard set.
    #[arg(long)]
    pub allow_custom: bool,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output dataset file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also export the records as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Training dataset file.
    #[arg(long)]
    pub data: PathBuf,
    /// Hidden widths: `30`, `30,10`, or `none` for the shallow network.
    #[arg(long)]
    pub hidden: Option<String>,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Loss history CSV (default: `<out>.loss.csv`).
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Test dataset file.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory for report.json, scatter.csv and scatter.svg.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Default, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[arg(long)]
    pub train_samples: Option<usize>,
    #[arg(long)]
    pub test_samples: Option<usize>,
    /// Output directory; finished cells found here are reused.
    #[arg(long)]
    pub out: PathBuf,
    /// Recompute every cell.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SweepPointsArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Point counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub points: Option<Vec<usize>>,
    /// Architecture, repeatable: `none`, `30`, `30,10`.
    #[arg(long = "arch")]
    pub archs: Option<Vec<String>>,
    #[arg(long)]
    pub allow_custom: bool,
}

#[derive(Debug, Args)]
pub struct SweepWidthArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,
    /// Thickness points per profile.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub allow_custom: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 10k/1k samples, 30 epochs.
    Ci,
    /// 100k/10k samples, 100 epochs.
    Paper,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, value_enum, default_value = "ci")]
    pub scale: Scale,
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => commands::generate(&a).map(|_| ()),
        Command::Train(a) => commands::train(&a).map(|_| ()),
        Command::Evaluate(a) => {
            let report = commands::evaluate(&a)?;
            println!("mean_eps={:.6}", report.mean_eps);
            println!("std_eps={:.6}", report.std_eps);
            println!("n_samples={}", report.n_samples);
            Ok(())
        }
        Command::SweepPoints(a) => sweep::sweep_points_cmd(&a).map(|_| ()),
        Command::SweepWidth(a) => sweep::sweep_width_cmd(&a).map(|_| ()),
        Command::Reproduce(a) => sweep::reproduce_cmd(&a).map(|_| ()),
    }
}

/// Parses `args` (including the program name) and runs, returning the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

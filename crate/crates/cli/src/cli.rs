//! Command-line argument surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "windcast",
    version,
    about = "Block-sparse spatio-temporal wind speed forecasting pipeline"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Validate, gap-fill and canonicalize a wide CSV of hourly station series
    Ingest(IngestArgs),
    /// Generate a synthetic dataset from a planted block-sparse model
    Synth(SynthArgs),
    /// Fit block-sparse coefficients for one target station
    Train(TrainArgs),
    /// Backtest a single method and write its prediction series
    Forecast(ForecastArgs),
    /// Build a metrics report from stored prediction runs
    Evaluate(EvaluateArgs),
    /// Run several methods through the identical backtest and compare them
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
pub struct CommonArgs {
    /// JSON config file; explicit flags override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// RNG seed (used by synth, recorded in every manifest)
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Input wide CSV (`timestamp,<id1>,<id2>,...`)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Longest missing run (hours) to fill by linear interpolation
    #[arg(long)]
    pub gap_limit: Option<usize>,
}

#[derive(Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of stations P
    #[arg(long)]
    pub stations: Option<usize>,
    /// Uniform lag order for the planted model
    #[arg(long)]
    pub order: Option<usize>,
    /// Per-station lag orders (overrides --order)
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<usize>>,
    /// Nonzero blocks per target (includes the self block)
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Noise standard deviation in m/s
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Stationary mean wind speed in m/s
    #[arg(long)]
    pub baseline: Option<f64>,
    /// Hours to generate
    #[arg(long)]
    pub hours: Option<usize>,
    /// Hours discarded before the series starts
    #[arg(long)]
    pub burn_in: Option<usize>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Target station id
    #[arg(long)]
    pub target: Option<String>,
    /// Uniform lag order
    #[arg(long)]
    pub order: Option<usize>,
    /// Select per-station lag orders by correlation analysis
    #[arg(long)]
    pub nonuniform: bool,
    /// Lag cap for order selection
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Correlation threshold for order selection
    #[arg(long)]
    pub tau: Option<f64>,
    /// Maximum blocks the pursuit may select
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub gap_limit: Option<usize>,
}

#[derive(Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Target station id
    #[arg(long)]
    pub target: Option<String>,
    /// First validation hour (training uses hours before it)
    #[arg(long)]
    pub split_hour: Option<usize>,
    /// Method specification, e.g. cst_uniform(3)
    #[arg(long)]
    pub method: Option<String>,
    /// Steps per refresh cycle
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Training window in hours
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Tune nonuniform lag orders on a held-out slice of the training span
    #[arg(long)]
    pub tune_orders: bool,
    #[arg(long)]
    pub gap_limit: Option<usize>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Prediction run CSVs (`hour,actual,predicted,method`)
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub runs: Vec<PathBuf>,
    /// Horizon used for the per-step breakdown
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Target label recorded in the report
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Target station id
    #[arg(long)]
    pub target: Option<String>,
    /// First validation hour (training uses hours before it)
    #[arg(long)]
    pub split_hour: Option<usize>,
    /// Steps per refresh cycle
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Training window in hours
    #[arg(long)]
    pub window: Option<usize>,
    /// Comma-separated method specifications
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Tune nonuniform lag orders on a held-out slice of the training span
    #[arg(long)]
    pub tune_orders: bool,
    /// Backtest up to this many methods in parallel
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub gap_limit: Option<usize>,
}

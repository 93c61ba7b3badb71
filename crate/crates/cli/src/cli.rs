//! Argument definitions. Options that may also come from a key=value
//! config file are `Option`s here; resolution order is CLI flag, then
//! config file, then the built-in default.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "pricegate",
    version,
    about = "Gate-then-price for second-hand listings: train a qualification gate and a log-price regressor jointly, evaluate them, and serve price suggestions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic transactions CSV with a ground-truth sidecar.
    Synth(SynthArgs),
    /// Build the historical price statistics file from a transactions CSV.
    Stats(StatsArgs),
    /// Train the joint gate/regressor models and write a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a transactions CSV.
    Eval(EvalArgs),
    /// Train once per constraint value and tabulate held-out gate metrics.
    Sweep(SweepArgs),
    /// Price one listing from a checkpoint.
    Predict(PredictArgs),
    /// Serve predictions over HTTP.
    Serve(ServeArgs),
}

/// Options shared with the config file (`key=value` lines; CLI wins).
#[derive(Debug, Args, Default, Clone)]
pub struct CommonOpts {
    /// Config file path; defaults to $GATED_PRICE_CONFIG when set.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Constraint mode: percentile or threshold.
    #[arg(long)]
    pub mode: Option<String>,
    /// Minimum accepted fraction (hinge constraint).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Hinge weight.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Cross-entropy weight (threshold mode).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Log-error tolerance defining positives (threshold mode, required there).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Run seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Number of rows.
    #[arg(long, default_value_t = 20_000)]
    pub n: usize,
    /// Visual feature dimension.
    #[arg(long = "d-v", default_value_t = 32)]
    pub d_v: usize,
    #[arg(long, default_value_t = 13)]
    pub n_categories: u32,
    #[arg(long, default_value_t = 500)]
    pub n_sellers: usize,
    /// Fraction of rows whose features carry no price signal.
    #[arg(long, default_value_t = 0.3)]
    pub noise_fraction: f64,
    /// Base log-price noise level.
    #[arg(long, default_value_t = 0.25)]
    pub noise_sigma: f64,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Transactions CSV to index.
    #[arg(long)]
    pub data: PathBuf,
    /// Symmetric price-outlier trim applied before indexing.
    #[arg(long, default_value_t = 0.0)]
    pub trim_fraction: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Transactions CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 4096)]
    pub batch_size: usize,
    /// Hidden layer sizes, comma separated.
    #[arg(long, default_value = "64,32")]
    pub hidden: String,
    /// Phase list as stage:lr:epochs triples, comma separated.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Use the full-size reference schedule instead of the desk default.
    #[arg(long, default_value_t = false)]
    pub reference_schedule: bool,
    /// Train/validation/test ratios.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub ratios: String,
    /// Symmetric price-outlier trim applied before splitting.
    #[arg(long, default_value_t = 0.05)]
    pub trim_fraction: f64,
    /// Skip input standardization.
    #[arg(long, default_value_t = false)]
    pub no_standardize: bool,
    /// Ablation arm: same epoch budget, every phase gated.
    #[arg(long, default_value_t = false)]
    pub no_warmup: bool,
    /// Per-epoch log CSV path.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Transactions CSV to evaluate on.
    #[arg(long)]
    pub data: PathBuf,
    /// Ground-truth sidecar; enables the gate AUC column.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output format: table or csv.
    #[arg(long, default_value = "table")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    #[arg(long)]
    pub data: PathBuf,
    /// Constraint values to train at, comma separated, ascending.
    #[arg(long)]
    pub values: String,
    #[arg(long, default_value_t = 4096)]
    pub batch_size: usize,
    #[arg(long, default_value = "64,32")]
    pub hidden: String,
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long, default_value_t = false)]
    pub reference_schedule: bool,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub ratios: String,
    #[arg(long, default_value_t = 0.05)]
    pub trim_fraction: f64,
    #[arg(long, default_value_t = false)]
    pub no_standardize: bool,
    #[arg(long, default_value = "table")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Visual features, comma separated.
    #[arg(long)]
    pub features: String,
    #[arg(long)]
    pub category_id: u32,
    #[arg(long)]
    pub seller_id: String,
    /// Output format: json (exact wire format) or table.
    #[arg(long, default_value = "json")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
}

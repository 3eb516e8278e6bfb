//! Argument surface of the `har` binary and its exit-code contract.
//!
//! Exit codes: 0 success (including `--help`/`--version`), 1 usage or
//! configuration error, 2 data error, 3 numerical failure. Scripts can
//! branch on the class of failure without parsing stderr.

pub mod commands;
pub mod config_file;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config_file::FileConfig;

#[derive(Debug, Parser)]
#[command(
    name = "har",
    version,
    about = "Activity recognition experiments on knee-angle recordings",
    propagate_version = true
)]
pub struct Cli {
    /// TOML configuration file: [pipeline], [experiment], [overrides.*], [grid].
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Base directory for relative dataset paths.
    #[arg(long, global = true, env = "HAR_DATA_DIR", value_name = "DIR")]
    pub data_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset in the interchange format.
    Synth(SynthArgs),
    /// Leave-one-subject-out cross-validation; writes per-fold and summary reports.
    Evaluate(EvaluateArgs),
    /// Exhaustive hyperparameter search scored on one held-out subject.
    Gridsearch(GridsearchArgs),
    /// Median train/test timings per algorithm, raw vs features.
    Benchmark(BenchmarkArgs),
    /// Dump the per-window matrix as CSV.
    Features(FeaturesArgs),
    /// Print a dataset summary and its windowing under the configured pipeline.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of subjects (at least 2).
    #[arg(long)]
    pub subjects: u32,
    /// Recording length per (subject, activity), in seconds.
    #[arg(long)]
    pub seconds: f64,
    /// Generator seed.
    #[arg(long, default_value_t = 100)]
    pub seed: u64,
    /// Output dataset path; a .meta.toml sidecar is written next to it.
    #[arg(long, default_value = "dataset.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset path (relative paths resolve under --data-dir).
    #[arg(long, default_value = "dataset.csv")]
    pub data: PathBuf,
    /// Comma-separated algorithm tags (nb,dt,rf,knn,gb,svm) or "all".
    #[arg(long)]
    pub algos: Option<String>,
    /// Comma-separated representations (raw,features) or "all".
    #[arg(long)]
    pub repr: Option<String>,
    /// Report directory [default: reports].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: one per fold].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Replace random_state on every classifier spec.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GridsearchArgs {
    /// Dataset path (relative paths resolve under --data-dir).
    #[arg(long, default_value = "dataset.csv")]
    pub data: PathBuf,
    /// Representation the grid is tuned for (raw or features).
    #[arg(long)]
    pub repr: String,
    /// Held-out validation subject [default: highest id].
    #[arg(long)]
    pub subject: Option<u32>,
    /// Report directory [default: reports].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: one per combination, capped at 32].
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Dataset path (relative paths resolve under --data-dir).
    #[arg(long, default_value = "dataset.csv")]
    pub data: PathBuf,
    /// Comma-separated algorithm tags or "all".
    #[arg(long)]
    pub algos: Option<String>,
    /// Timed runs per representation; medians are reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Report directory [default: reports].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Free-form hardware/environment note recorded in the report.
    #[arg(long)]
    pub notes: Option<String>,
    /// Replace random_state on every classifier spec.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Dataset path (relative paths resolve under --data-dir).
    #[arg(long, default_value = "dataset.csv")]
    pub data: PathBuf,
    /// Matrix to dump: features (six statistics) or raw (window samples).
    #[arg(long, default_value = "features")]
    pub repr: String,
    /// Output CSV path.
    #[arg(long, default_value = "features.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Dataset path (relative paths resolve under --data-dir).
    #[arg(long, default_value = "dataset.csv")]
    pub data: PathBuf,
}

/// Dispatch a parsed command line.
pub fn run(cli: &Cli) -> har_core::Result<()> {
    let config = FileConfig::load(cli.config.as_deref())?;
    let data_dir = cli.data_dir.as_deref();
    match &cli.command {
        Command::Synth(args) => commands::cmd_synth(args, data_dir),
        Command::Evaluate(args) => commands::cmd_evaluate(args, &config, data_dir),
        Command::Gridsearch(args) => commands::cmd_gridsearch(args, &config, data_dir),
        Command::Benchmark(args) => commands::cmd_benchmark(args, &config, data_dir),
        Command::Features(args) => commands::cmd_features(args, &config, data_dir),
        Command::Inspect(args) => commands::cmd_inspect(args, &config, data_dir),
    }
}

/// Map an error to the documented exit code. Numerical failures win over
/// the data class because they are the more specific diagnosis.
pub fn exit_code(error: &har_core::Error) -> i32 {
    if error.is_numerical_error() {
        3
    } else if error.is_data_error() {
        2
    } else {
        1
    }
}

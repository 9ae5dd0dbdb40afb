//! `unlearn` — dataset preparation, the unlearning benchmark grid, and
//! result reporting, as one binary with one subcommand per pipeline
//! stage.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "unlearn",
    version,
    about = "Removal-enabled random forests and a retraining-vs-unlearning benchmark",
    propagate_version = true
)]
struct Cli {
    /// Flat `key = value` config file; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset container from synthetic data or a labeled-text CSV.
    Generate(GenerateArgs),
    /// Split a dataset container into train and test containers.
    Preprocess(PreprocessArgs),
    /// Run the benchmark grid; append the text log and the results CSV.
    Bench(BenchArgs),
    /// Convert a results text log into the results CSV.
    Tidy(TidyArgs),
    /// Render a results CSV as an SVG chart.
    Plot(PlotArgs),
    /// Run the built-in oracle checks and exit nonzero on any failure.
    Selftest,
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct GenerateSource {
    /// Generate a synthetic two-class dataset.
    #[arg(long, group = "source")]
    synthetic: bool,
    /// Ingest a CSV of labeled text rows.
    #[arg(long, value_name = "FILE", group = "source")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    source: GenerateSource,

    /// Synthetic rows [default: 2000].
    #[arg(long)]
    rows: Option<usize>,
    /// Synthetic feature columns [default: 64].
    #[arg(long)]
    dims: Option<usize>,
    /// Distance between the synthetic class means [default: 1.5].
    #[arg(long)]
    class_sep: Option<f64>,

    /// CSV column holding the user id [default: user_id].
    #[arg(long)]
    user_id_col: Option<String>,
    /// CSV column holding the 0/1 label [default: label].
    #[arg(long)]
    label_col: Option<String>,
    /// CSV column holding the text [default: text].
    #[arg(long)]
    text_col: Option<String>,
    /// Hash buckets for text encoding [default: 64].
    #[arg(long)]
    hash_features: Option<usize>,
    /// Store token counts instead of 0/1 presence.
    #[arg(long)]
    count_tokens: bool,

    /// Seed [default: 42, or UNLEARN_SEED].
    #[arg(long)]
    seed: Option<u64>,

    /// Output dataset container.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Input dataset container.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Fraction of rows held out for testing [default: 0.3].
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Seed [default: 42, or UNLEARN_SEED].
    #[arg(long)]
    seed: Option<u64>,
    /// Output container for the training split.
    #[arg(long, value_name = "FILE")]
    train_out: PathBuf,
    /// Output container for the test split.
    #[arg(long, value_name = "FILE")]
    test_out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Training dataset container.
    #[arg(long, value_name = "FILE")]
    train: PathBuf,
    /// Test dataset container.
    #[arg(long, value_name = "FILE")]
    test: PathBuf,
    /// Results text log (appended).
    #[arg(long, value_name = "FILE")]
    log: PathBuf,
    /// Results CSV (appended; header written when new).
    #[arg(long, value_name = "FILE")]
    csv: PathBuf,

    /// Training-set sizes, comma separated [default: 10,100,1000].
    #[arg(long)]
    sizes: Option<String>,
    /// Deletion percentages, comma separated [default: 0.25,0.5,0.75].
    #[arg(long)]
    pcts: Option<String>,
    /// Strategies, comma separated [default: naive,sisa_dare].
    #[arg(long)]
    strategies: Option<String>,
    /// Repeats of the whole grid [default: 1].
    #[arg(long)]
    repeats: Option<u32>,
    /// Master seed [default: 42, or UNLEARN_SEED].
    #[arg(long)]
    seed: Option<u64>,

    /// Shards for the sharded strategy [default: 1].
    #[arg(long)]
    shards: Option<usize>,
    /// Slices per shard [default: 1].
    #[arg(long)]
    slices: Option<usize>,
    /// Trees per forest [default: 10].
    #[arg(long)]
    trees: Option<usize>,
    /// Maximum tree depth [default: 10].
    #[arg(long)]
    max_depth: Option<usize>,
    /// Candidate thresholds per feature [default: 8].
    #[arg(long)]
    thresholds_per_feature: Option<usize>,
    /// Feature columns sampled per tree [default: ceil(sqrt(d))].
    #[arg(long)]
    max_features: Option<usize>,
    /// Minimum rows per leaf [default: 1].
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    /// Reduce the test set only when it exceeds this many rows.
    #[arg(long)]
    test_ceiling: Option<usize>,

    /// Run trials on this many threads. Correctness only: parallel
    /// timings contend for cores and must not be compared.
    #[arg(long, value_name = "THREADS")]
    parallel: Option<usize>,
}

#[derive(Args)]
struct TidyArgs {
    /// Results text log to convert.
    #[arg(long, value_name = "FILE")]
    log: PathBuf,
    /// Output CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Results CSV to render.
    #[arg(long, value_name = "FILE")]
    csv: PathBuf,
    /// Output SVG.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match config::Settings::load(cli.config.as_deref()) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::FAILURE;
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => commands::generate(&args, &settings),
        Command::Preprocess(args) => commands::preprocess(&args, &settings),
        Command::Bench(args) => commands::bench(&args, &settings),
        Command::Tidy(args) => commands::tidy(&args),
        Command::Plot(args) => commands::plot(&args),
        Command::Selftest => commands::selftest(),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

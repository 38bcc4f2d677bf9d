mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vtest::Metric;

#[derive(Parser)]
#[command(
    name = "vtest",
    version,
    about = "Exchangeability tests based on the variance of pairwise distances"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "VTEST_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the V test on a matrix or on cached block distances.
    Test(TestArgs),
    /// Run the Tracy-Widom largest-eigenvalue test.
    Tw(TwArgs),
    /// Cache per-block distance matrices for later `test --distances` runs.
    Distances(DistancesArgs),
    /// Write one simulated dataset.
    Simulate(SimulateArgs),
    /// Estimate false-positive rates on null data.
    Fpr(RateArgs),
    /// Estimate power on structured data.
    Power(RateArgs),
    /// AUROC of a test for separating two models.
    Roc(RocArgs),
    /// Time the permutation, chi-square and normal engines.
    Bench(BenchArgs),
    /// Write the tabulated Tracy-Widom distribution function.
    F1Table(F1Args),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Delimited,
    GenotypeDosage,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Perm,
    Chisq,
    Normal,
    Boot,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PValueArg {
    Valid,
    Unbiased,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: vtest::Error| e.to_string())
}

#[derive(Args)]
pub struct MatrixArgs {
    /// Observation-by-feature matrix (comma or tab delimited).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Set entries above this value to 1 and the rest to 0.
    #[arg(long)]
    binarize_threshold: Option<f64>,
    /// Drop columns whose folded frequency is below this value.
    #[arg(long)]
    min_freq: Option<f64>,
}

#[derive(Args)]
pub struct TestArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Manifest listing one cached distance matrix per block.
    #[arg(long, conflicts_with = "input")]
    distances: Option<PathBuf>,
    /// Block file: `feature_index block_id` per line.
    #[arg(long)]
    blocks: Option<PathBuf>,
    /// Treat every feature as its own block.
    #[arg(long, conflicts_with = "blocks")]
    singleton_blocks: bool,
    #[arg(long, value_parser = parse_metric)]
    metric: Option<Metric>,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    /// Resamples for the permutation and bootstrap tests.
    #[arg(long = "R", env = "VTEST_R", default_value_t = vtest::vstat::DEFAULT_RESAMPLES)]
    resamples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "valid")]
    pvalue: PValueArg,
    /// Normalizing constant for `--distances` input (default 1).
    #[arg(long)]
    norm: Option<f64>,
    /// Features (or blocks) from which `auto` uses the chi-square mixture.
    #[arg(long, default_value_t = vtest::asymptotics::DEFAULT_AUTO_THRESHOLD)]
    auto_threshold: usize,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TwArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct DistancesArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    #[arg(long)]
    blocks: Option<PathBuf>,
    #[arg(long, conflicts_with = "blocks")]
    singleton_blocks: bool,
    #[arg(long, value_parser = parse_metric)]
    metric: Metric,
    /// Directory receiving `block_<b>.tsv` and `manifest.txt`.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct ModelArgs {
    /// Null model: a config file or one of low, varying, high, mixture_gaussian.
    #[arg(long)]
    null: Option<String>,
    /// Scenario config file for structured data.
    #[arg(long, conflicts_with = "null")]
    scenario: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Replicate index; each index gives a different dataset.
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write the hidden population labels of a scenario here.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
pub struct TestChoice {
    /// One of v, v-perm, v-chisq, v-normal, v-boot, tw.
    #[arg(long, default_value = "v")]
    test: String,
    #[arg(long = "R", env = "VTEST_R", default_value_t = vtest::vstat::DEFAULT_RESAMPLES)]
    resamples: usize,
    #[arg(long, value_enum, default_value = "valid")]
    pvalue: PValueArg,
    /// Metric for real-valued data.
    #[arg(long, value_parser = parse_metric, default_value = "euclidean-sq")]
    metric: Metric,
    #[arg(long, default_value_t = vtest::asymptotics::DEFAULT_AUTO_THRESHOLD)]
    auto_threshold: usize,
}

#[derive(Args)]
pub struct RateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    test: TestChoice,
    /// Comma-separated significance levels.
    #[arg(long, default_value = "0.05", value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct RocArgs {
    /// Null arm: a config file or a null kind.
    #[arg(long)]
    null: String,
    /// Alternative arm: a config file or a null kind.
    #[arg(long)]
    alt: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[command(flatten)]
    test: TestChoice,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the ROC points here.
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated NxP dimensions.
    #[arg(long, default_value = "50x500,500x50,500x500", value_delimiter = ',')]
    dims: Vec<String>,
    #[arg(long = "R", env = "VTEST_R", default_value_t = 5000)]
    resamples: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct F1Args {
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || match cli.command {
        Command::Test(a) => commands::test(a),
        Command::Tw(a) => commands::tw(a),
        Command::Distances(a) => commands::distances(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Fpr(a) => commands::rate(a, false),
        Command::Power(a) => commands::rate(a, true),
        Command::Roc(a) => commands::roc(a),
        Command::Bench(a) => commands::bench(a),
        Command::F1Table(a) => commands::f1_table(a),
    };
    let outcome = match cli.threads {
        Some(0) => Err(commands::CliError::Usage(
            "--threads must be at least 1".into(),
        )),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(commands::CliError::Internal(format!("thread pool: {e}"))),
        },
        None => run(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vtest: {e}");
            ExitCode::from(e.code())
        }
    }
}

//! `pge`: train text-aware product graph embeddings and flag suspicious triples.

mod commands;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pge", version, about = "Noise-tolerant product graph embeddings for attribute error detection")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every random stream; overrides the config file.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Force deterministic execution.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Output directory; tabular results go to stdout when omitted.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write checkpoint, epoch log and resolved config.
    Train(TrainArgs),
    /// Score triples and flag those at or below the decision threshold.
    Detect(DetectArgs),
    /// Precision-recall report for a labeled test set.
    Eval(EvalArgs),
    /// Generate a synthetic product graph with injected noise.
    Synth(SynthArgs),
    /// Add value-corrupted copies of a fraction of the triples.
    InjectNoise(InjectArgs),
    /// Drop training triples that share an entity with the test set.
    SplitInductive(SplitArgs),
    /// Combine two rankings by mean reciprocal rank.
    Fuse(FuseArgs),
    /// Compare learned confidences of clean and corrupted triples.
    Confidence(ConfidenceArgs),
    /// Time training on growing subsamples of the training data.
    Time(TimeArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training triples; overrides `train` in the config.
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,
    /// Labeled validation triples for model selection; overrides `valid`.
    #[arg(long, value_name = "PATH")]
    pub valid: Option<PathBuf>,
    /// Number of epochs; overrides `epochs`.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("threshold").required(true).args(["valid", "theta"])))]
pub struct DetectArgs {
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    /// Triples to score.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Labeled triples to pick the threshold from.
    #[arg(long, value_name = "PATH")]
    pub valid: Option<PathBuf>,
    /// Explicit threshold; `inf` flags everything.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Positive {
    Incorrect,
    Correct,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model to score the test set with.
    #[arg(long, value_name = "PATH", required_unless_present = "scored")]
    pub checkpoint: Option<PathBuf>,
    /// Labeled test triples.
    #[arg(long, value_name = "PATH", required_unless_present = "scored")]
    pub test: Option<PathBuf>,
    /// Pre-scored labeled triples (`score, title, attribute, value, label`) instead of a model.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["checkpoint", "test"])]
    pub scored: Option<PathBuf>,
    /// Labeled validation triples; adds threshold accuracy to the report.
    #[arg(long, value_name = "PATH")]
    pub valid: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "incorrect")]
    pub positive: Positive,
    /// Precision targets for recall-at-precision.
    #[arg(long, value_delimiter = ',', default_values_t = [0.7, 0.8, 0.9])]
    pub precision: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator spec (`key = value` lines); built-in food themes when omitted.
    #[arg(long, value_name = "PATH")]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub products: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Value,
    HeadOrTail,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub ratio: f64,
    #[arg(long, value_enum, default_value = "value")]
    pub mode: Mode,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Full triple set.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Test triples whose entities must not appear in training.
    #[arg(long, value_name = "PATH")]
    pub test: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Order {
    Descending,
    Ascending,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// First ranking: `rank` column, or rows in rank order (e.g. detect output).
    #[arg(long, value_name = "PATH")]
    pub a: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub b: PathBuf,
    #[arg(long, value_enum, default_value = "descending")]
    pub order: Order,
}

#[derive(Debug, Args)]
pub struct ConfidenceArgs {
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    /// Corruption log marking which training triples are noise.
    #[arg(long, value_name = "PATH")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TimeArgs {
    /// Training triples; overrides `train` in the config.
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75, 1.0])]
    pub ratios: Vec<f64>,
}

fn init_threads() -> Result<(), String> {
    let Some(raw) = std::env::var_os("PGE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("PGE_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let common = &cli.common;
    let result = match &cli.command {
        Command::Train(a) => commands::train(common, a),
        Command::Detect(a) => commands::detect(common, a),
        Command::Eval(a) => commands::eval(common, a),
        Command::Synth(a) => commands::synth(common, a),
        Command::InjectNoise(a) => commands::inject_noise(common, a),
        Command::SplitInductive(a) => commands::split_inductive(common, a),
        Command::Fuse(a) => commands::fuse(common, a),
        Command::Confidence(a) => commands::confidence(common, a),
        Command::Time(a) => commands::time(common, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

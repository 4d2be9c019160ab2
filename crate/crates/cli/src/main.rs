//! `jscds` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 benchmark finished with failed cells.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "jscds", version, about = "Coreset selection experiments: generate, select, train, benchmark, evaluate")]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output file (gen, select, eval) or directory (train, benchmark).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// How the command summary is printed.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic Gaussian-cluster dataset with label noise.
    Gen(GenArgs),
    /// Select a core set from a dataset.
    Select(SelectArgs),
    /// Train the classifier with periodic core-set reselection.
    Train(TrainArgs),
    /// Sweep methods x fractions x seeds and write a comparison report.
    Benchmark(BenchmarkArgs),
    /// Evaluate a saved model on a dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 1000)]
    pub per_class: usize,
    #[arg(long, default_value_t = 16)]
    pub dims: usize,
    /// Per-coordinate standard deviation of each cluster.
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    /// Distance between class centers.
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    /// Fraction of samples whose label is flipped, in [0, 1).
    #[arg(long, default_value_t = 0.0, value_parser = parse_noise)]
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Nearest,
    Rank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    Global,
    Stratified,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Dataset file (id,label,f0,...).
    pub dataset: PathBuf,
    /// jscds, random, moderate, kcenter or forgetting.
    #[arg(long)]
    pub method: String,
    #[arg(long, value_parser = parse_fraction)]
    pub fraction: f64,
    /// Number of classes; inferred from the labels when omitted.
    #[arg(long)]
    pub classes: Option<usize>,
    /// Model whose hidden layer provides the embeddings; raw features are used otherwise.
    #[arg(long, conflicts_with = "trace")]
    pub model: Option<PathBuf>,
    /// Correctness trace (id,e0,e1,...) for the forgetting selector.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// JSCDS band: nearest to the average score, or a rank window.
    #[arg(long, value_enum, default_value_t = WindowArg::Nearest)]
    pub window: WindowArg,
    /// JSCDS pool: one global pool or per-class quotas.
    #[arg(long, value_enum, default_value_t = ScopeArg::Global)]
    pub scope: ScopeArg,
}

#[derive(Debug, Args, Clone)]
pub struct TrainFlags {
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 10)]
    pub reselect_every: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    /// Full-data epochs before the first selection.
    #[arg(long, default_value_t = 0)]
    pub warmup: usize,
    /// Seed of the stratified 8:1:1 train/val/test split.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    pub classes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub dataset: PathBuf,
    #[arg(long, default_value = "full")]
    pub method: String,
    #[arg(long, default_value_t = 1.0, value_parser = parse_fraction)]
    pub fraction: f64,
    /// Forgetting trace over the training split; a full-data run provides it when omitted.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    pub dataset: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "random,moderate,kcenter,forgetting,jscds")]
    pub methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7", value_parser = parse_fraction)]
    pub fractions: Vec<f64>,
    /// Training seeds; `--seed` is ignored by this command.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub classes: Option<usize>,
}

fn parse_noise(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1)"))
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1]"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `tabpriv` command-line tool.
//!
//! Exit codes: 0 on success, 2 for usage and validation errors, 1 when a
//! run fails after its inputs were accepted.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tabpriv::harness::Metric;

use config::{RunConfig, SpaceChoice};

#[derive(Parser, Debug)]
#[command(name = "tabpriv", version, about = "Privacy risk metrics for synthetic tabular data")]
struct Cli {
    /// JSON file with run configuration keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split a real dataset into train, control and release sets.
    Split(SplitArgs),
    /// Train the contrastive encoder on the train split.
    Embed(EmbedArgs),
    /// Distance-to-closest-record privacy score.
    Dcr(DcrArgs),
    /// Singling-out attack against train and control.
    Attack(AttackArgs),
    /// Leaky-dataset experiment grid.
    Leaky(LeakyArgs),
    /// Score externally generated synthetic files labeled with an overfitting ratio.
    Overfit(OverfitArgs),
    /// Wall-clock of each metric against row count.
    Timing(TimingArgs),
    /// Train encoders of several widths and compare the outlier attack risk.
    SweepDim(SweepArgs),
    /// Write a census-style demo dataset.
    DemoData(DemoArgs),
}

#[derive(Args, Debug, Default)]
pub struct InputArgs {
    /// Schema declaration (JSON list of columns).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Keep only these columns, in this order.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Real dataset (CSV with header).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Train, control and release fractions.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    fractions: Option<Vec<f64>>,
    #[command(flatten)]
    io: InputArgs,
}

#[derive(Args, Debug)]
pub struct EncoderArgs {
    #[arg(long)]
    corpus: Option<tabpriv::embedder::Corpus>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[command(flatten)]
    encoder: EncoderArgs,
    #[command(flatten)]
    io: InputArgs,
}

#[derive(Args, Debug)]
pub struct DcrArgs {
    #[arg(long)]
    synthetic: Option<PathBuf>,
    /// Training set D1.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Holdout set D2, disjoint from the training set.
    #[arg(long, alias = "control")]
    holdout: Option<PathBuf>,
    #[arg(long, value_enum)]
    space: Option<SpaceChoice>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Percentile α of the real-to-real distances.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    bootstrap: Option<usize>,
    #[command(flatten)]
    io: InputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SourceChoice {
    Baseline,
    Embedding,
    Both,
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    control: Option<PathBuf>,
    #[arg(long, value_enum)]
    source: Option<SourceChoice>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Attribute counts per guess.
    #[arg(long, value_delimiter = ',')]
    n_attrs: Option<Vec<usize>>,
    /// Requested guesses per configuration.
    #[arg(long)]
    guesses: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Split manifest used to check that train and control are disjoint.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    io: InputArgs,
}

#[derive(Args, Debug)]
pub struct LeakyArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    /// Leak fractions, ascending.
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    /// Levels for σ, λ and p; the grid is their cartesian product.
    #[arg(long, value_delimiter = ',')]
    noise_levels: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<Metric>>,
    /// Replicate seeds.
    #[arg(long, value_delimiter = ',')]
    replicates: Option<Vec<u64>>,
    #[arg(long)]
    guesses: Option<usize>,
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Ignore points recorded by an earlier run.
    #[arg(long)]
    fresh: bool,
    #[command(flatten)]
    encoder: EncoderArgs,
    #[command(flatten)]
    io: InputArgs,
}

#[derive(Args, Debug)]
pub struct OverfitArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    control: Option<PathBuf>,
    /// Synthetic file as PATH:F_O:LABEL; repeatable.
    #[arg(long = "run")]
    runs: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<Metric>>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    guesses: Option<usize>,
    #[command(flatten)]
    io: InputArgs,
}

#[derive(Args, Debug)]
pub struct TimingArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    rows: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<Metric>>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    guesses: Option<usize>,
    #[command(flatten)]
    io: InputArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    control: Option<PathBuf>,
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    guesses: Option<usize>,
    #[command(flatten)]
    encoder: EncoderArgs,
    #[command(flatten)]
    io: InputArgs,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 15_000)]
    rows: usize,
    /// Output CSV; defaults to <out>/adult_like.csv.
    #[arg(long)]
    file: Option<PathBuf>,
}

/// Failure of a command, tagged with its exit code.
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => e,
        }
    }
}

impl From<tabpriv::Error> for Failure {
    fn from(e: tabpriv::Error) -> Self {
        use tabpriv::Error::*;
        match e {
            Csv(_) | Json(_) | Arity { .. } | Parse { .. } | Schema(_) | UnknownColumn(_) | Parameter(_)
            | Checkpoint(_) => Failure::Usage(e.into()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref(), std::env::vars()).map_err(Failure::Usage)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(Failure::Usage(anyhow::anyhow!("--threads must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Runtime(e.into()))?;
    }
    match cli.command {
        Command::Split(a) => commands::split(cfg, a),
        Command::Embed(a) => commands::embed(cfg, a),
        Command::Dcr(a) => commands::dcr(cfg, a),
        Command::Attack(a) => commands::attack(cfg, a),
        Command::Leaky(a) => commands::leaky(cfg, a),
        Command::Overfit(a) => commands::overfit(cfg, a),
        Command::Timing(a) => commands::timing(cfg, a),
        Command::SweepDim(a) => commands::sweep_dim(cfg, a),
        Command::DemoData(a) => commands::demo_data(cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

//! Command-line front end for the `treeprune` library.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Core(#[from] treeprune::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use treeprune::Error as E;
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Core(e) => match e {
                E::BudgetExceeded { .. } | E::GateFailed(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "treeprune", version, about = "Pruning processes on random trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample conditioned Galton-Watson trees as JSONL.
    SampleGw(SampleGwArgs),
    /// Sample birthday p-trees as JSONL.
    SamplePtree(SamplePtreeArgs),
    /// Coding paths (Wup, Wdown, height, contour) of each tree.
    Code(CodeArgs),
    /// Run pruning trajectories on each tree.
    Prune(PruneArgs),
    /// Compare two finite metric measure spaces.
    Compare(CompareArgs),
    /// Lower mass of each tree.
    MassBound(MassBoundArgs),
    /// Run a seeded self-convergence experiment.
    Experiment(ExperimentArgs),
}

/// Tree input shared by the commands that read trees.
#[derive(Debug, Args, Serialize)]
pub struct TreeInput {
    /// Tree JSONL file ("-" for stdin).
    #[arg(long, conflicts_with = "fixture")]
    pub input: Option<String>,
    /// Built-in tree instead of a file.
    #[arg(long)]
    pub fixture: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleGwArgs {
    /// geometric, poisson, binary or stable:ALPHA
    #[arg(long, default_value = "geometric")]
    pub law: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rejection attempts per tree before giving up.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Output file; stdout if absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SamplePtreeArgs {
    /// JSON array of probabilities, or uniform:N
    #[arg(long)]
    pub p: String,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct CodeArgs {
    #[command(flatten)]
    pub trees: TreeInput,
    /// csv or json
    #[arg(long, default_value = "csv")]
    pub format: String,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct PruneArgs {
    #[command(flatten)]
    pub trees: TreeInput,
    /// ske, bra or mix
    #[arg(long)]
    pub measure: String,
    /// unit, law:NAME (Galton-Watson rescaling) or ptree (weights from mu)
    #[arg(long, default_value = "unit")]
    pub scale: String,
    #[arg(long)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Comma-separated snapshot times.
    #[arg(long, value_delimiter = ',')]
    pub snap: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for events.csv and snapshots.jsonl.
    #[arg(long)]
    #[serde(skip)]
    pub out: String,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// nu-cloud, gp-bound or prokhorov
    #[arg(long)]
    pub mode: String,
    /// First space (JSON).
    #[arg(long)]
    pub a: String,
    /// Second space (JSON).
    #[arg(long)]
    pub b: String,
    /// subsets or flow, for prokhorov mode.
    #[arg(long, default_value = "flow")]
    pub method: String,
    /// Also minimise over all correspondences (small spaces only).
    #[arg(long)]
    pub exhaustive: bool,
    /// Sampled points per distance matrix, for nu-cloud mode.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct MassBoundArgs {
    #[command(flatten)]
    pub trees: TreeInput,
    #[arg(long)]
    pub delta: f64,
    /// Radius of the root ball, or "inf".
    #[arg(long, default_value = "inf")]
    pub radius: String,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub name: String,
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: String,
    /// Output directory for the report JSON and CSV table.
    #[arg(long)]
    #[serde(skip)]
    pub out: String,
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("TREEPRUNE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| CliError::Config(format!("TREEPRUNE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::SampleGw(a) => commands::sample_gw(&a),
        Command::SamplePtree(a) => commands::sample_ptree(&a),
        Command::Code(a) => commands::code(&a),
        Command::Prune(a) => commands::prune(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::MassBound(a) => commands::mass_bound(&a),
        Command::Experiment(a) => commands::experiment(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

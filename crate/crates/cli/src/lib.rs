//! Batch front-end for sense induction and evaluation.
//!
//! Every subcommand takes its inputs from flags, from a `--manifest` file,
//! or both; flags win. Usage and validation problems exit with status 2,
//! runtime failures with status 1.

pub mod commands;
pub mod manifest;
pub mod options;
pub mod sweep;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Bad flags, manifests or input paths, detected before any heavy work.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl UsageError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug)]
pub enum CliError {
    Usage(UsageError),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) => write!(f, "usage error: {e}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<UsageError> for CliError {
    fn from(e: UsageError) -> Self {
        CliError::Usage(e)
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<senseforge::Error> for CliError {
    fn from(e: senseforge::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "senseforge", version, about = "Word sense induction by context-graph clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Induce senses for one configuration and write a key file.
    Induce(InduceArgs),
    /// Score a system key file against gold.
    Evaluate(EvaluateArgs),
    /// Produce and score the baseline labelings.
    Baseline(BaselineArgs),
    /// Induce and score every configuration of a parameter grid.
    Sweep(SweepArgs),
    /// Print graph and partition statistics per lemma.
    Inspect(InspectArgs),
}

/// Embedding-space and clustering parameters. For `sweep` the first four
/// take comma-separated lists.
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Context window per side of the target, or `full`.
    #[arg(long)]
    pub window: Option<String>,
    /// Nearest neighbours per node, or `full` for a complete graph.
    #[arg(long)]
    pub k: Option<String>,
    /// `cosine` or `euclidean` (inverse distance).
    #[arg(long)]
    pub sim: Option<String>,
    /// `add` or `avg`.
    #[arg(long)]
    pub compose: Option<String>,
    /// Shuffle the Louvain visiting order with this seed.
    #[arg(long)]
    pub seed: Option<String>,
    /// Arithmetic precision of the numeric core: `f32` or `f64`.
    #[arg(long)]
    pub precision: Option<String>,
}

/// Mapping and scoring parameters.
#[derive(Debug, Clone, Default, Args)]
pub struct EvalArgs {
    /// Gold key file.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Cross-validation folds of the sense mapping.
    #[arg(long)]
    pub folds: Option<String>,
    /// Mapped senses below this weight are dropped.
    #[arg(long)]
    pub threshold: Option<String>,
    /// Comma-separated subset of `all`, `single-sense`, `multi-sense`.
    #[arg(long)]
    pub filter: Option<String>,
    /// Mapping of communities absent from the training folds: `prior` or `drop`.
    #[arg(long)]
    pub unseen: Option<String>,
    /// `auto`, `always` or `never`.
    #[arg(long)]
    pub mapping: Option<String>,
    /// Score WNDCG gains without the system/gold weight ratio.
    #[arg(long)]
    pub no_weight_ratio: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InduceArgs {
    /// `key = value` run file; flags override its entries.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// word2vec vectors; `.txt`/`.vec` files are read as text, others as binary.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Instances, one JSON object per line.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write per-lemma embedding, graph and partition dumps.
    #[arg(long)]
    pub debug: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvaluateArgs {
    /// `key = value` run file; flags override its entries.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// System key file.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// System name in the report; defaults to the key file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// Directory for report.csv, report.json, diagnostics.tsv and mapped.key.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub eval: EvalArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BaselineArgs {
    /// `key = value` run file; flags override its entries.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Instances, one JSON object per line.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Sense frequency table (`lemma sense count` lines) for mfs and ranked.
    #[arg(long)]
    pub freq: Option<PathBuf>,
    /// Comma-separated subset of `one-sense`, `1c1inst`, `mfs`, `ranked`;
    /// defaults to all that the inputs allow.
    #[arg(long)]
    pub kind: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub eval: EvalArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    /// `key = value` run file; flags override its entries.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// word2vec vectors; `.txt`/`.vec` files are read as text, others as binary.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Instances, one JSON object per line.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InspectArgs {
    /// `key = value` run file; flags override its entries.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// word2vec vectors; `.txt`/`.vec` files are read as text, others as binary.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Instances, one JSON object per line.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Restrict to one lemma.
    #[arg(long)]
    pub lemma: Option<String>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

/// Sizes the global worker pool from `SENSEFORGE_THREADS` when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("SENSEFORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError::new(format!("SENSEFORGE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Runtime(e.into()))
}

pub fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Induce(a) => commands::induce(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Baseline(a) => commands::baseline(&a),
        Command::Sweep(a) => sweep::sweep(&a),
        Command::Inspect(a) => commands::inspect(&a),
    }
}

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::CliError;

/// Builds definienda datasets from LaTeX papers and scores term extractors.
#[derive(Debug, Parser)]
#[command(name = "defitex", version)]
struct Cli {
    /// JSON file with pipeline settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for default inputs and outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Do not echo warnings to standard error.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Index a corpus directory into a manifest.
    Scan(ScanArgs),
    /// Extract definition blocks and their candidate definienda.
    Extract(ExtractArgs),
    /// Tokenize, label and filter definitions into a dataset.
    Build(BuildArgs),
    /// Reserve the test pool, apply corrections and make folds.
    Split(SplitArgs),
    /// Score predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Summarize a dataset file.
    Stats(StatsArgs),
    /// Write predictions equal to the gold terms.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Tab-separated `paper_id, last_updated[, category]` table.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Additional environment names to treat as definitions.
    #[arg(long = "env")]
    pub env: Vec<String>,
    /// JSON object of extra `\command` to text replacements.
    #[arg(long)]
    pub symbols: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub definitions: Option<PathBuf>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// Remove examples whose tags are all `O`.
    #[arg(long)]
    pub drop_empty: bool,
    /// Noise pattern file replacing the built-in lists.
    #[arg(long)]
    pub filter: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub corrections: Option<PathBuf>,
    #[arg(long)]
    pub test_size: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub subsample_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    #[arg(long, conflicts_with = "aggregate")]
    pub predictions: Option<PathBuf>,
    /// Score every `*.jsonl` prediction file in a directory and aggregate.
    #[arg(long)]
    pub aggregate: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the per-term detail stream to this JSONL file.
    #[arg(long)]
    pub per_example: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(dir) = cli.out_dir {
        cfg.out_dir = dir;
    }
    let ctx = commands::Context { quiet: cli.quiet };
    match cli.command {
        Command::Scan(a) => {
            if a.root.is_some() {
                cfg.root = a.root.clone();
            }
            if a.metadata.is_some() {
                cfg.metadata = a.metadata.clone();
            }
            commands::scan(&ctx, &cfg, &a)
        }
        Command::Extract(a) => {
            cfg.env.extend(a.env.iter().cloned());
            if a.symbols.is_some() {
                cfg.symbols = a.symbols.clone();
            }
            commands::extract(&ctx, &cfg, &a)
        }
        Command::Build(a) => {
            if let Some(n) = a.max_tokens {
                cfg.max_tokens = n;
            }
            if a.filter.is_some() {
                cfg.filter = a.filter.clone();
            }
            cfg.validate()?;
            commands::build(&ctx, &cfg, &a)
        }
        Command::Split(a) => {
            if let Some(n) = a.test_size {
                cfg.test_size = n;
            }
            if let Some(k) = a.folds {
                cfg.folds = k;
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            if let Some(sizes) = &a.subsample_sizes {
                cfg.subsample_sizes = sizes.clone();
            }
            cfg.validate()?;
            commands::split(&ctx, &cfg, &a)
        }
        Command::Evaluate(a) => commands::evaluate(&ctx, &cfg, &a),
        Command::Stats(a) => commands::stats(&cfg, &a),
        Command::Oracle(a) => commands::oracle(&cfg, &a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DEFITEX_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("defitex: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}

//! Command-line front end: `synth`, `run`, `eval`, `compare`, `embed` and
//! `replay`.
//!
//! Exit codes: 0 on success, 1 on a runtime failure (diverged training,
//! exhausted budget, unreadable data), 2 on a usage or configuration error.

mod commands;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "alseg", version, about = "Active-learning query strategies for binary image segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic ellipse dataset.
    Synth(SynthArgs),
    /// Run active-learning experiments.
    Run(RunArgs),
    /// Score a checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Compare run records against a baseline.
    Compare(CompareArgs),
    /// Dump 2D PCA and UMAP embeddings of bottleneck features.
    Embed(EmbedArgs),
    /// Re-execute a recorded run and check its query history.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    pub subjects: usize,
    #[arg(long, default_value_t = 10)]
    pub slices: usize,
    #[arg(long, default_value_t = 32)]
    pub side: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add a second small ellipse to a quarter of the slices.
    #[arg(long)]
    pub hard: bool,
    #[arg(long, default_value_t = 0.2)]
    pub holdout: f64,
    #[arg(long, default_value = "synthetic")]
    pub name: String,
    /// Output directory.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Standard,
    LargeInitial,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment config.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Dataset manifest (overrides the config).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Strategy name; repeat to run several.
    #[arg(long = "strategy", value_name = "NAME")]
    pub strategies: Vec<String>,
    #[arg(long)]
    pub n_c: Option<usize>,
    #[arg(long)]
    pub n_u: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub epochs_per_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Train on the whole train split instead (reference run).
    #[arg(long)]
    pub full_data: bool,
    /// Concurrent strategy runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory; each run writes to `<out>/<label>/`.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitArg {
    Train,
    Holdout,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "holdout")]
    pub split: SplitArg,
    /// Per-sample metric CSV.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Run manifest of the baseline (normally the random strategy).
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Run manifests to compare.
    pub runs: Vec<PathBuf>,
    /// Output directory for `comparison.csv` and `comparison.json`.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Run manifest (`run.json`).
    pub manifest: PathBuf,
    /// Dataset manifest, if it moved since the run.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    /// Configuration-stage errors are usage errors; I/O and parse failures
    /// of existing inputs are runtime errors.
    pub(crate) fn config(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Parse { .. } | Error::Validation(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Parse `args` (including the program name) and run the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Run(a) => commands::run(a),
        Command::Eval(a) => commands::eval(a),
        Command::Compare(a) => commands::compare(a),
        Command::Embed(a) => commands::embed(a),
        Command::Replay(a) => commands::replay(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

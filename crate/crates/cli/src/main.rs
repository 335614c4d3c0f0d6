//! Command-line front end for the `seqbayes` classifiers.
//!
//! Subcommands cover the full experiment loop: `train` fits a model and
//! writes its checkpoint plus reports, `evaluate` scores a checkpoint on
//! a labeled set, `predict` labels raw texts, `verify-appendix` replays
//! the exact-equivalence suites for the telescoped classifiers, and
//! `synth` samples symbolic datasets from a known generative law.
//!
//! Exit codes: 0 on success, 1 when a run fails (data, shape, or
//! verification errors), 2 on usage errors (bad flags, unknown names,
//! missing input paths). Every run is deterministic given its manifest.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Naive Bayes and pooled Markov sequence classifiers over word embeddings.
#[derive(Debug, Parser)]
#[command(name = "seqbayes", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a classifier and write checkpoint, logs, and reports.
    Train(TrainArgs),
    /// Score a saved checkpoint on a labeled dataset.
    Evaluate(EvaluateArgs),
    /// Predict labels for raw texts from a file or standard input.
    Predict(PredictArgs),
    /// Check the telescoped classifiers against exact enumeration on
    /// random generative laws.
    VerifyAppendix(VerifyArgs),
    /// Sample labeled symbol sequences from a pooled joint law.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Model kind: gaussian-nb, neural-nb, or neural-pooled-mc.
    #[arg(long)]
    model: String,

    /// Context order k for neural-pooled-mc; windows span k + 1 tokens.
    #[arg(long)]
    order: Option<usize>,

    /// Labeled training set (jsonl, csv, or tsv, inferred from the extension).
    #[arg(long)]
    train: PathBuf,

    /// Labeled held-out test set in the same layout.
    #[arg(long)]
    test: PathBuf,

    /// Embedding table in word2vec text format.
    #[arg(long)]
    embeddings: PathBuf,

    /// Output directory for checkpoint, epoch log, report, and manifest.
    #[arg(long)]
    out: PathBuf,

    /// TOML file supplying values for any tuning flag left unset.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Fraction of the training set held out for validation.
    #[arg(long)]
    val_fraction: Option<f64>,

    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,

    /// Mini-batch size.
    #[arg(long)]
    batch: Option<usize>,

    /// Training epochs per run.
    #[arg(long)]
    epochs: Option<usize>,

    /// Independent seeded runs behind the reported mean.
    #[arg(long)]
    runs: Option<usize>,

    /// Base seed; run r trains with seed + r.
    #[arg(long)]
    seed: Option<u64>,

    /// Hidden layer width of the neural scorers.
    #[arg(long)]
    hidden: Option<usize>,

    /// Dataset format override when the extension is ambiguous.
    #[arg(long)]
    format: Option<String>,

    /// Field holding the document text.
    #[arg(long, default_value = "text")]
    text_field: String,

    /// Field holding the class label.
    #[arg(long, default_value = "label")]
    label_field: String,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    checkpoint: PathBuf,

    /// Labeled dataset to score.
    #[arg(long)]
    test: PathBuf,

    /// Embedding table in word2vec text format.
    #[arg(long)]
    embeddings: PathBuf,

    /// Dataset format override when the extension is ambiguous.
    #[arg(long)]
    format: Option<String>,

    /// Field holding the document text.
    #[arg(long, default_value = "text")]
    text_field: String,

    /// Field holding the class label.
    #[arg(long, default_value = "label")]
    label_field: String,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    checkpoint: PathBuf,

    /// Embedding table in word2vec text format.
    #[arg(long)]
    embeddings: PathBuf,

    /// File with one text per line; standard input when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Random generative laws per classifier suite.
    #[arg(long, default_value_t = 100)]
    trials: usize,

    /// Base seed for drawing the laws and the sampled sequences.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Longest sequence length exercised per law.
    #[arg(long, default_value_t = 6)]
    max_t: usize,

    /// Corrupt one derived table per suite so the check must fail.
    #[arg(long, hide = true)]
    inject_corruption: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Markov order of the sampled law (0, 1, or 2).
    #[arg(long)]
    order: Option<usize>,

    /// Number of classes in the drawn law.
    #[arg(long)]
    classes: Option<usize>,

    /// Alphabet size of the drawn law.
    #[arg(long)]
    symbols: Option<usize>,

    /// Load the generating law from this model file instead of drawing one.
    #[arg(long)]
    spec: Option<PathBuf>,

    /// Sequences to sample.
    #[arg(long, default_value_t = 1000)]
    count: usize,

    /// Shortest sampled length; defaults to order + 1.
    #[arg(long)]
    t_min: Option<usize>,

    /// Longest sampled length.
    #[arg(long, default_value_t = 10)]
    t_max: usize,

    /// Seed for the law draw and the sampling stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output directory for the law, the dataset, and the manifest.
    #[arg(long)]
    out: PathBuf,
}

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
enum CliError {
    /// Bad invocation: unknown names, malformed flags, missing inputs.
    Usage(String),
    /// The run itself failed: data, shape, or verification errors.
    Runtime(String),
}

impl From<seqbayes::Error> for CliError {
    fn from(err: seqbayes::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => commands::train(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Predict(args) => commands::predict(args),
        Command::VerifyAppendix(args) => commands::verify_appendix(args),
        Command::Synth(args) => commands::synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

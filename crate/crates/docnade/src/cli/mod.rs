//! Command-line front end: `ingest`, `train`, `eval`, `inspect`.
//!
//! Every command writes its resolved configuration, seed and input hashes
//! into the output directory, so a run directory is self-describing and a
//! seed-fixed rerun is byte-identical. Exit codes: 0 success, 2 usage error,
//! 1 runtime error.

pub mod config;
mod evaluate;
mod ingest;
mod inspect;
mod train;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "docnade",
    version,
    about = "Autoregressive neural document models: topic models and a document-context language model"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn pre-tokenized text into corpus files and a vocabulary
    Ingest(ingest::IngestArgs),
    /// Train a model and write per-epoch metrics
    Train(train::TrainArgs),
    /// Evaluate perplexity or document retrieval
    Eval(evaluate::EvalArgs),
    /// Inspect embeddings: nearest words and hidden-unit topics
    Inspect(inspect::InspectArgs),
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Ingest(args) => ingest::run(&args),
        Command::Train(args) => train::run(&args),
        Command::Eval(args) => evaluate::run(&args),
        Command::Inspect(args) => inspect::run(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

//! `docnade inspect`: nearest words and hidden-unit topics.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use super::config::{ensure_out_dir, write_text, RunConfig};
use crate::corpus::files;
use crate::eval::{hidden_unit_topics, nearest_words};
use crate::model_io::{self, Model};
use crate::nn::{ParamTensor, Shape};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InspectTask {
    /// Nearest words by embedding cosine similarity
    Neighbors,
    /// Strongest-connected words per hidden unit
    Topics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WhichEmbedding {
    /// Document-context embeddings
    Dn,
    /// Language-model n-gram embeddings
    Lm,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, value_enum)]
    pub task: InspectTask,
    /// Comma-separated query tokens (neighbors)
    #[arg(long)]
    pub words: Option<String>,
    /// Comma-separated hidden unit ids, or "all" (topics)
    #[arg(long, default_value = "all")]
    pub units: String,
    /// Neighbors per query word
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Words per hidden-unit topic
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    /// For the language model: which embedding table to inspect
    #[arg(long, value_enum, default_value_t = WhichEmbedding::Dn)]
    pub matrix: WhichEmbedding,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &InspectArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let (model, meta) = model_io::load(&args.model)?;
    let vocab = files::read_vocab(&args.vocab)?;
    meta.check_vocab(&vocab)?;

    let embedding = select_embedding(&model, args.matrix, vocab.len());

    let mut config = RunConfig::new("inspect");
    config.set("task", format!("{:?}", args.task).to_lowercase());
    config.set("model_kind", model.kind());
    config.set("matrix", format!("{:?}", args.matrix).to_lowercase());
    config.hash_input("model", &args.model)?;
    config.hash_input("vocab", &args.vocab)?;
    config.write(&args.out)?;

    match args.task {
        InspectTask::Neighbors => {
            let words = args
                .words
                .as_ref()
                .ok_or_else(|| Error::Config("neighbors needs --words".into()))?;
            let mut tsv = String::from("query\trank\tneighbor\tcosine\n");
            for token in words.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let id = vocab
                    .id(token)
                    .ok_or_else(|| Error::Config(format!("`{token}` is not in the vocabulary")))?;
                for (rank, (neighbor, sim)) in nearest_words(&embedding, id, args.k)?
                    .into_iter()
                    .enumerate()
                {
                    let _ = writeln!(
                        tsv,
                        "{token}\t{}\t{}\t{sim}",
                        rank + 1,
                        vocab.token(neighbor).unwrap_or("?")
                    );
                }
            }
            write_text(&args.out.join("neighbors.tsv"), &tsv)?;
            println!("wrote neighbors.tsv");
        }
        InspectTask::Topics => {
            let units: Vec<usize> = if args.units == "all" {
                (0..embedding.rows()).collect()
            } else {
                args.units
                    .split(',')
                    .map(|u| {
                        u.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::Config(format!("bad unit id `{u}`")))
                    })
                    .collect::<Result<_>>()?
            };
            let mut tsv = String::from("unit\trank\tword\tweight\n");
            for unit in units {
                for (rank, word) in hidden_unit_topics(&embedding, unit, args.top_k)?
                    .into_iter()
                    .enumerate()
                {
                    let _ = writeln!(
                        tsv,
                        "{unit}\t{}\t{}\t{}",
                        rank + 1,
                        vocab.token(word).unwrap_or("?"),
                        embedding.at(unit, word as usize)
                    );
                }
            }
            write_text(&args.out.join("topics.tsv"), &tsv)?;
            println!("wrote topics.tsv");
        }
    }
    Ok(())
}

/// The embedding matrix to inspect, restricted to real words (the language
/// model's padding column is dropped).
fn select_embedding(model: &Model, which: WhichEmbedding, vocab_size: usize) -> ParamTensor {
    let source = match (model, which) {
        (Model::DocNadeLm(m), WhichEmbedding::Lm) => &m.lm_embedding,
        _ => model.embedding(),
    };
    if source.cols() == vocab_size {
        return source.clone();
    }
    let rows = source.rows();
    let mut values = Vec::with_capacity(rows * vocab_size);
    for r in 0..rows {
        values.extend_from_slice(&source.row(r)[..vocab_size]);
    }
    ParamTensor::from_values(source.name.clone(), Shape::Matrix(rows, vocab_size), values)
        .expect("shape math")
}

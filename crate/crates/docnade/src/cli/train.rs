//! `docnade train`: fit a model and log per-epoch metrics.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use super::config::{ensure_out_dir, write_text, RunConfig};
use crate::corpus::{files, group_sentences, log_count_transform, Document, LogBase, Vocabulary};
use crate::model_io::{self, Model, ModelMeta};
use crate::models::deep::{DeepDocNadeModel, SplitStrategy};
use crate::models::docnade::DocNadeModel;
use crate::models::lm::DocNadeLmModel;
use crate::nn::Activation;
use crate::training::{
    train_deep, train_docnade, train_lm, EpochStats, OptimizerConfig, OptimizerKind, TrainOptions,
};
use crate::tree::{BinaryWordTree, ClassPartition};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Single hidden layer with a tree-structured output
    Docnade,
    /// Multi-layer split-context model with a flat softmax
    Deep,
    /// Document-context n-gram language model
    Lm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TreeKind {
    Random,
    Huffman,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Training corpus (.bow or .seq)
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Validation corpus for perplexity tracking and early stopping
    #[arg(long)]
    pub valid: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Hidden width (default 50; 100 for the language model)
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Hidden layers for the deep model (1..=3)
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    /// n-gram order for the language model
    #[arg(long, default_value_t = 6)]
    pub ngram: usize,
    /// sigmoid or tanh (defaults: docnade/lm sigmoid, deep tanh)
    #[arg(long)]
    pub activation: Option<String>,
    #[arg(long, default_value = "adam")]
    pub optimizer: String,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Early-stop patience, in epochs without validation improvement
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, value_enum, default_value_t = TreeKind::Random)]
    pub tree: TreeKind,
    /// Group this many adjacent sentences into one pseudo-document (lm)
    #[arg(long, default_value_t = 1)]
    pub group_sentences: usize,
    /// Skip the log(1+n) count compression for bag corpora
    #[arg(long)]
    pub raw_counts: bool,
    /// Count-compression base: e or 10
    #[arg(long, default_value = "e")]
    pub log_base: String,
    /// Language model only: disable the document-context term (FFN ablation)
    #[arg(long)]
    pub no_document_context: bool,
    /// Split sampling for the deep model: histogram or exact-ordering
    #[arg(long, default_value = "histogram")]
    pub split: String,
}

pub fn read_corpus(path: &Path) -> Result<Vec<Document>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bow") => files::read_bow(path),
        Some("seq") => files::read_seq(path),
        _ => Err(Error::Config(format!(
            "corpus `{}` must end in .bow or .seq",
            path.display()
        ))),
    }
}

fn validate_corpus(docs: &[Document], vocab: &Vocabulary, path: &Path) -> Result<()> {
    for doc in docs {
        doc.validate_ids(vocab.len()).map_err(|e| {
            Error::Config(format!(
                "corpus `{}` does not match the vocabulary: {e}",
                path.display()
            ))
        })?;
    }
    Ok(())
}

/// Bag documents with the count transform applied when requested.
pub fn to_bags(docs: &[Document], log_counts: bool, base: LogBase) -> Vec<Document> {
    docs.iter()
        .map(|doc| {
            let mut counts = doc.counts();
            if log_counts {
                counts = log_count_transform(&counts, base);
            }
            Document::bag(doc.source_id.clone(), doc.labels.clone(), counts)
        })
        .collect()
}

fn write_train_log(stats: &[EpochStats], path: &Path) -> Result<()> {
    let mut csv = String::from("epoch,mean_loss,validation_perplexity\n");
    for s in stats {
        let valid = s
            .validation_perplexity
            .map(|p| p.to_string())
            .unwrap_or_default();
        let _ = writeln!(csv, "{},{},{}", s.epoch, s.mean_loss, valid);
    }
    write_text(path, &csv)
}

pub fn run(args: &TrainArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let vocab = files::read_vocab(&args.vocab)?;
    let v = vocab.len();
    if v < 2 {
        return Err(Error::DegenerateVocabulary(v));
    }
    let train_docs = read_corpus(&args.corpus)?;
    validate_corpus(&train_docs, &vocab, &args.corpus)?;
    let valid_docs = match &args.valid {
        Some(path) => {
            let docs = read_corpus(path)?;
            validate_corpus(&docs, &vocab, path)?;
            Some(docs)
        }
        None => None,
    };

    let log_base = LogBase::parse(&args.log_base)?;
    let log_counts = !args.raw_counts && matches!(args.model, ModelKind::Docnade | ModelKind::Deep);
    let hidden = args.hidden.unwrap_or(match args.model {
        ModelKind::Lm => 100,
        _ => 50,
    });
    let activation = match &args.activation {
        Some(name) => Activation::parse(name)?,
        None => match args.model {
            ModelKind::Deep => Activation::Tanh,
            _ => Activation::Sigmoid,
        },
    };
    let optimizer = OptimizerConfig {
        kind: OptimizerKind::parse(&args.optimizer)?,
        learning_rate: args.learning_rate,
        ..OptimizerConfig::adam(args.learning_rate)
    };
    let options = TrainOptions {
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
        optimizer,
        patience: args.patience,
    };

    let mut meta = ModelMeta::new(vocab.hash64(), args.seed);
    meta.log_counts = log_counts;
    meta.log_base = log_base;
    meta.sentence_group = args.group_sentences;

    let (model, stats) = match args.model {
        ModelKind::Docnade => {
            let train = to_bags(&train_docs, log_counts, log_base);
            let valid = valid_docs
                .as_ref()
                .map(|d| to_bags(d, log_counts, log_base));
            let tree = match args.tree {
                TreeKind::Random => BinaryWordTree::random(v, args.seed)?,
                TreeKind::Huffman => BinaryWordTree::huffman(&vocab.smoothed_frequencies())?,
            };
            let mut model = DocNadeModel::new(hidden, tree, activation, args.seed);
            let stats = train_docnade(&mut model, &train, valid.as_deref(), &options)?;
            (Model::DocNade(model), stats)
        }
        ModelKind::Deep => {
            let train = to_bags(&train_docs, log_counts, log_base);
            let valid = valid_docs
                .as_ref()
                .map(|d| to_bags(d, log_counts, log_base));
            let widths = vec![hidden; args.layers];
            let mut model = DeepDocNadeModel::new(v, &widths, activation, args.seed)?;
            let strategy = SplitStrategy::parse(&args.split)?;
            let stats = train_deep(&mut model, &train, valid.as_deref(), strategy, &options)?;
            (Model::DeepDocNade(model), stats)
        }
        ModelKind::Lm => {
            let train = group_sentences(
                &require_sequences(&train_docs, &args.corpus)?,
                args.group_sentences,
            );
            let valid = match (&valid_docs, &args.valid) {
                (Some(docs), Some(path)) => Some(group_sentences(
                    &require_sequences(docs, path)?,
                    args.group_sentences,
                )),
                _ => None,
            };
            let partition = ClassPartition::build(v)?;
            let mut model = DocNadeLmModel::new(
                hidden,
                args.ngram,
                partition,
                activation,
                !args.no_document_context,
                args.seed,
            )?;
            let stats = train_lm(&mut model, &train, valid.as_deref(), &options)?;
            (Model::DocNadeLm(model), stats)
        }
    };

    write_train_log(&stats, &args.out.join("train_log.csv"))?;
    model_io::save(&model, &meta, &args.out.join("model.dnade"))?;

    let mut config = RunConfig::new("train");
    config.set("model", format!("{:?}", args.model).to_lowercase());
    config.set("hidden", hidden);
    config.set("layers", args.layers);
    config.set("ngram", args.ngram);
    config.set("activation", activation.name());
    config.set("optimizer", optimizer.kind.name());
    config.set("learning_rate", args.learning_rate);
    config.set("batch_size", args.batch_size);
    config.set("epochs", args.epochs);
    config.set("seed", args.seed);
    config.set("tree", format!("{:?}", args.tree).to_lowercase());
    config.set("group_sentences", args.group_sentences);
    config.set("log_counts", log_counts);
    config.set("log_base", log_base.name());
    config.set("split", args.split.clone());
    config.set("document_context", !args.no_document_context);
    config.set("vocab_hash", format!("{:#018x}", vocab.hash64()));
    if let Some(p) = args.patience {
        config.set("patience", p);
    }
    config.hash_input("corpus", &args.corpus)?;
    config.hash_input("vocab", &args.vocab)?;
    if let Some(valid) = &args.valid {
        config.hash_input("valid", valid)?;
    }
    config.write(&args.out)?;

    let last = stats.last().expect("at least one epoch");
    match last.validation_perplexity {
        Some(ppl) => println!(
            "trained {} epochs, final mean loss {:.4}, validation perplexity {:.3}",
            stats.len(),
            last.mean_loss,
            ppl
        ),
        None => println!(
            "trained {} epochs, final mean loss {:.4}",
            stats.len(),
            last.mean_loss
        ),
    }
    Ok(())
}

fn require_sequences(docs: &[Document], path: &Path) -> Result<Vec<Document>> {
    if docs.iter().any(|d| d.ids().is_none()) {
        return Err(Error::Config(format!(
            "the language model needs a .seq corpus, got bags in `{}`",
            path.display()
        )));
    }
    Ok(docs.to_vec())
}

//! `docnade ingest`: pre-tokenized text to corpus files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use super::config::{ensure_out_dir, write_text, RunConfig};
use crate::corpus::{files, stopwords, Document, Vocabulary, WordCounts};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Bag-of-words counts (`corpus.bow`)
    Bow,
    /// Ordered word-id sequences (`corpus.seq`)
    Seq,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Pre-tokenized input: one document per line, either
    /// `doc_id<TAB>label,label<TAB>token token ...` or bare tokens
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Bow)]
    pub format: OutputFormat,
    /// Keep the N most frequent tokens
    #[arg(long, default_value_t = 2000)]
    pub max_vocab: usize,
    /// Reuse an existing vocabulary file instead of building one
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Drop bundled English stop words before anything else
    #[arg(long)]
    pub remove_stopwords: bool,
}

struct RawDoc {
    source_id: String,
    labels: Vec<String>,
    tokens: Vec<String>,
}

pub fn run(args: &IngestArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let text = fs::read_to_string(&args.input).map_err(Error::io(&args.input))?;

    let mut raw_docs = Vec::new();
    let mut tokens_read = 0usize;
    let mut tokens_stopword = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (source_id, labels, body) = match fields.len() {
            1 => (format!("doc{lineno:06}"), Vec::new(), fields[0]),
            3 => (
                fields[0].to_owned(),
                fields[1]
                    .split(',')
                    .filter(|l| !l.is_empty())
                    .map(str::to_owned)
                    .collect(),
                fields[2],
            ),
            n => {
                return Err(Error::Parse {
                    path: args.input.display().to_string(),
                    line: lineno + 1,
                    message: format!("expected 1 or 3 tab-separated fields, got {n}"),
                })
            }
        };
        let mut tokens = Vec::new();
        for token in body.split_whitespace() {
            tokens_read += 1;
            if args.remove_stopwords && stopwords::is_stopword(token) {
                tokens_stopword += 1;
                continue;
            }
            tokens.push(token.to_owned());
        }
        raw_docs.push(RawDoc {
            source_id,
            labels,
            tokens,
        });
    }
    if raw_docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let vocab = match &args.vocab {
        Some(path) => files::read_vocab(path)?,
        None => Vocabulary::build(raw_docs.iter().map(|d| d.tokens.clone()), args.max_vocab)?,
    };

    // Labels are assigned ids by sorted string order, for reproducibility.
    let mut label_ids: BTreeMap<String, u32> = BTreeMap::new();
    for doc in &raw_docs {
        for label in &doc.labels {
            label_ids.entry(label.clone()).or_insert(0);
        }
    }
    for (next, id) in label_ids.values_mut().enumerate() {
        *id = next as u32;
    }

    let mut docs = Vec::new();
    let mut skipped_empty = 0usize;
    let mut tokens_oov = 0usize;
    for raw in &raw_docs {
        let ids: Vec<u32> = raw
            .tokens
            .iter()
            .filter_map(|t| {
                let id = vocab.id(t);
                if id.is_none() {
                    tokens_oov += 1;
                }
                id
            })
            .collect();
        if ids.is_empty() {
            skipped_empty += 1;
            continue;
        }
        let labels: Vec<u32> = raw.labels.iter().map(|l| label_ids[l]).collect();
        docs.push(match args.format {
            OutputFormat::Seq => Document::sequence(raw.source_id.clone(), labels, ids),
            OutputFormat::Bow => {
                Document::bag(raw.source_id.clone(), labels, WordCounts::from_ids(&ids))
            }
        });
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let corpus_name = match args.format {
        OutputFormat::Bow => "corpus.bow",
        OutputFormat::Seq => "corpus.seq",
    };
    match args.format {
        OutputFormat::Bow => files::write_bow(&docs, &args.out.join(corpus_name))?,
        OutputFormat::Seq => files::write_seq(&docs, &args.out.join(corpus_name))?,
    }
    files::write_vocab(&vocab, &args.out.join("vocab.txt"))?;

    let mut labels_tsv = String::new();
    for (label, id) in &label_ids {
        let _ = writeln!(labels_tsv, "{id}\t{label}");
    }
    write_text(&args.out.join("labels.tsv"), &labels_tsv)?;

    let mut report = String::new();
    let _ = writeln!(report, "documents_read={}", raw_docs.len());
    let _ = writeln!(report, "documents_kept={}", docs.len());
    let _ = writeln!(report, "documents_skipped_empty={skipped_empty}");
    let _ = writeln!(report, "tokens_read={tokens_read}");
    let _ = writeln!(report, "tokens_dropped_stopword={tokens_stopword}");
    let _ = writeln!(report, "tokens_dropped_oov={tokens_oov}");
    let _ = writeln!(report, "vocabulary_size={}", vocab.len());
    write_text(&args.out.join("ingest_report.txt"), &report)?;

    let mut config = RunConfig::new("ingest");
    config.set(
        "format",
        match args.format {
            OutputFormat::Bow => "bow",
            OutputFormat::Seq => "seq",
        },
    );
    config.set("max_vocab", args.max_vocab);
    config.set("remove_stopwords", args.remove_stopwords);
    config.set("vocab_hash", format!("{:#018x}", vocab.hash64()));
    config.hash_input("input", &args.input)?;
    config.write(&args.out)?;

    println!(
        "ingested {} documents ({} skipped empty), vocabulary {}",
        docs.len(),
        skipped_empty,
        vocab.len()
    );
    Ok(())
}

//! `docnade eval`: perplexity and retrieval protocols.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use super::config::{ensure_out_dir, parallel_map, write_text, RunConfig};
use super::train::{read_corpus, to_bags};
use crate::corpus::{files, group_sentences, Document, Vocabulary};
use crate::eval::{default_cutoffs, retrieval_pr, PRCurve};
use crate::model_io::{self, Model, ModelMeta};
use crate::models::deep::EnsembleSpec;
use crate::nn::log_mean_exp;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Perplexity,
    Retrieval,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, value_enum)]
    pub task: Task,
    /// Test corpus for the perplexity task
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Retrieval database corpora (repeatable; typically train and valid)
    #[arg(long)]
    pub db: Vec<PathBuf>,
    /// Retrieval query corpus (typically test)
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Comma-separated ensemble sizes, e.g. 1,2,4,16,32,64,128,256
    #[arg(long, default_value = "1")]
    pub ensemble: String,
    /// Seed for ensemble orderings (default: the model's training seed)
    #[arg(long)]
    pub ensemble_seed: Option<u64>,
    /// Evaluate only the first N documents
    #[arg(long)]
    pub cap_docs: Option<usize>,
    /// Worker threads for evaluation (outputs are identical regardless)
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let (model, meta) = model_io::load(&args.model)?;
    let vocab = files::read_vocab(&args.vocab)?;
    meta.check_vocab(&vocab)?;

    let mut config = RunConfig::new("eval");
    config.set("task", format!("{:?}", args.task).to_lowercase());
    config.set("model_kind", model.kind());
    config.set("threads", args.threads);
    config.set("vocab_hash", format!("{:#018x}", vocab.hash64()));
    config.hash_input("model", &args.model)?;
    config.hash_input("vocab", &args.vocab)?;

    match args.task {
        Task::Perplexity => {
            let corpus_path = args
                .corpus
                .as_ref()
                .ok_or_else(|| Error::Config("perplexity needs --corpus".into()))?;
            let docs = load_for_model(&model, &meta, corpus_path, &vocab)?;
            let mut docs = docs;
            if let Some(cap) = args.cap_docs {
                docs.truncate(cap);
                config.set("cap_docs", cap);
            }
            if docs.is_empty() {
                return Err(Error::EmptyDocumentSet);
            }
            let mut ensemble_sizes = parse_ensemble(&args.ensemble)?;
            if matches!(model, Model::DocNadeLm(_)) && ensemble_sizes != [1] {
                println!("the language model scores the given word order; ignoring --ensemble");
                ensemble_sizes = vec![1];
            }
            let seed = args.ensemble_seed.unwrap_or(meta.seed);
            config.set("ensemble", &args.ensemble);
            config.set("ensemble_seed", seed);
            config.hash_input("corpus", corpus_path)?;
            config.write(&args.out)?;
            run_perplexity(
                &model,
                &docs,
                &ensemble_sizes,
                seed,
                args.threads,
                &args.out,
            )
        }
        Task::Retrieval => {
            let queries_path = args
                .queries
                .as_ref()
                .ok_or_else(|| Error::Config("retrieval needs --queries".into()))?;
            if args.db.is_empty() {
                return Err(Error::Config("retrieval needs at least one --db".into()));
            }
            let mut db_docs = Vec::new();
            for (i, path) in args.db.iter().enumerate() {
                db_docs.extend(load_for_model(&model, &meta, path, &vocab)?);
                config.hash_input(&format!("db{i}"), path)?;
            }
            let query_docs = load_for_model(&model, &meta, queries_path, &vocab)?;
            config.hash_input("queries", queries_path)?;
            config.write(&args.out)?;
            run_retrieval(&model, &db_docs, &query_docs, args.threads, &args.out)
        }
    }
}

/// Reads a corpus and replays the model's training-time preprocessing.
fn load_for_model(
    model: &Model,
    meta: &ModelMeta,
    path: &Path,
    vocab: &Vocabulary,
) -> Result<Vec<Document>> {
    let docs = read_corpus(path)?;
    for doc in &docs {
        doc.validate_ids(vocab.len())?;
    }
    let docs = match model {
        Model::DocNade(_) | Model::DeepDocNade(_) => to_bags(&docs, meta.log_counts, meta.log_base),
        Model::DocNadeLm(_) => {
            if docs.iter().any(|d| d.ids().is_none()) {
                return Err(Error::Config(format!(
                    "the language model needs a .seq corpus, got bags in `{}`",
                    path.display()
                )));
            }
            group_sentences(&docs, meta.sentence_group)
        }
    };
    let total = docs.len();
    let kept: Vec<Document> = docs.into_iter().filter(|d| !d.is_empty()).collect();
    if kept.len() < total {
        println!(
            "skipped {} empty document(s) from {}",
            total - kept.len(),
            path.display()
        );
    }
    Ok(kept)
}

fn parse_ensemble(field: &str) -> Result<Vec<usize>> {
    let sizes = field
        .split(',')
        .map(|m| {
            m.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad ensemble size `{m}`")))
        })
        .collect::<Result<Vec<usize>>>()?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Config("ensemble sizes must be positive".into()));
    }
    Ok(sizes)
}

fn run_perplexity(
    model: &Model,
    docs: &[Document],
    ensemble_sizes: &[usize],
    seed: u64,
    threads: usize,
    out: &Path,
) -> Result<()> {
    let mut summary = String::from("ensemble_size,perplexity,n_docs,n_words\n");
    for (mi, &m) in ensemble_sizes.iter().enumerate() {
        let spec = EnsembleSpec::new(m, seed);
        let logprobs: Vec<f64> = parallel_map(docs, threads, |doc| doc_logprob(model, doc, &spec))
            .into_iter()
            .collect::<Result<_>>()?;

        let mut acc = 0.0;
        let mut n_words = 0usize;
        let mut csv = String::from("doc_id,n_words,logprob\n");
        for (doc, lp) in docs.iter().zip(&logprobs) {
            let len = doc.word_count();
            acc += lp / len as f64;
            n_words += len;
            let _ = writeln!(csv, "{},{},{}", doc.source_id, len, lp);
        }
        let perplexity = (-acc / docs.len() as f64).exp();
        let name = if mi == 0 {
            "perplexity.csv".to_owned()
        } else {
            format!("perplexity_m{m}.csv")
        };
        write_text(&out.join(name), &csv)?;
        let _ = writeln!(summary, "{},{},{},{}", m, perplexity, docs.len(), n_words);
        println!(
            "ensemble {m}: perplexity {perplexity:.4} over {} documents",
            docs.len()
        );
    }
    write_text(&out.join("perplexity_summary.csv"), &summary)
}

fn doc_logprob(model: &Model, doc: &Document, spec: &EnsembleSpec) -> Result<f64> {
    match model {
        Model::DocNade(m) => {
            let members = spec
                .doc_orderings(&doc.counts(), &doc.source_id)?
                .iter()
                .map(|ordering| m.doc_logprob(ordering))
                .collect::<Result<Vec<f64>>>()?;
            Ok(log_mean_exp(&members))
        }
        Model::DeepDocNade(m) => m.ensemble_logprob(doc, spec),
        // The language model scores the given word order directly.
        Model::DocNadeLm(m) => m.doc_logprob(doc.ids().expect("sequence document")),
    }
}

fn representation(model: &Model, doc: &Document) -> Result<Vec<f64>> {
    match model {
        Model::DocNade(m) => m.doc_representation(doc),
        Model::DeepDocNade(m) => {
            let mut forward = m.forward(&doc.counts())?;
            Ok(forward.hiddens.pop().expect("at least one hidden layer"))
        }
        Model::DocNadeLm(_) => Err(Error::Config(
            "retrieval is defined for the topic models, not the language model".into(),
        )),
    }
}

fn run_retrieval(
    model: &Model,
    db_docs: &[Document],
    query_docs: &[Document],
    threads: usize,
    out: &Path,
) -> Result<()> {
    if db_docs.is_empty() || query_docs.is_empty() {
        return Err(Error::EmptyDocumentSet);
    }
    let db_reps: Vec<Vec<f64>> = parallel_map(db_docs, threads, |d| representation(model, d))
        .into_iter()
        .collect::<Result<_>>()?;
    let query_reps: Vec<Vec<f64>> = parallel_map(query_docs, threads, |d| representation(model, d))
        .into_iter()
        .collect::<Result<_>>()?;
    let db_labels: Vec<Vec<u32>> = db_docs.iter().map(|d| d.labels.clone()).collect();
    let query_labels: Vec<Vec<u32>> = query_docs.iter().map(|d| d.labels.clone()).collect();

    // Cutoffs: a coarse ladder plus each query label's relevant-set size.
    let mut relevant_counts = Vec::new();
    for labels in &query_labels {
        for &label in labels {
            relevant_counts.push(db_labels.iter().filter(|ls| ls.contains(&label)).count());
        }
    }
    let cutoffs = default_cutoffs(db_docs.len(), relevant_counts);

    let curve = retrieval_pr(&query_reps, &db_reps, &query_labels, &db_labels, &cutoffs)?;
    write_pr_curve(&curve, &out.join("pr_curve.csv"))?;
    if !curve.warnings.is_empty() {
        let mut text = String::new();
        for w in &curve.warnings {
            text.push_str(w);
            text.push('\n');
        }
        write_text(&out.join("warnings.txt"), &text)?;
    }
    println!(
        "retrieval over {} queries against {} documents ({} cutoffs)",
        query_docs.len(),
        db_docs.len(),
        curve.points.len()
    );
    Ok(())
}

fn write_pr_curve(curve: &PRCurve, path: &Path) -> Result<()> {
    let mut csv = String::from("cutoff,recall,precision\n");
    for p in &curve.points {
        let _ = writeln!(csv, "{},{},{}", p.cutoff, p.recall, p.precision);
    }
    write_text(path, &csv)
}

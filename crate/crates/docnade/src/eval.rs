//! Evaluation protocols: per-word perplexity, ordering-ensemble perplexity,
//! retrieval precision/recall curves, and embedding inspection.

use crate::corpus::Document;
use crate::models::deep::EnsembleSpec;
use crate::nn::{log_mean_exp, ParamTensor};
use crate::{Error, Result};

/// Per-word perplexity over a document set.
#[derive(Clone, Debug)]
pub struct PerplexityReport {
    pub perplexity: f64,
    pub n_docs: usize,
    pub n_words: usize,
    /// Orderings averaged per document (1 = single ordering).
    pub ensemble_size: usize,
}

/// `exp(−(1/T) Σ_t (1/|v_t|) · log p(v_t))`: the mean over documents of the
/// per-word-normalized log-probability.
pub fn perplexity<F>(docs: &[Document], mut logprob: F) -> Result<PerplexityReport>
where
    F: FnMut(&Document) -> Result<f64>,
{
    if docs.is_empty() {
        return Err(Error::EmptyDocumentSet);
    }
    let mut acc = 0.0;
    let mut n_words = 0;
    for doc in docs {
        let len = doc.word_count();
        if len == 0 {
            return Err(Error::EmptyDocument);
        }
        acc += logprob(doc)? / len as f64;
        n_words += len;
    }
    Ok(PerplexityReport {
        perplexity: (-acc / docs.len() as f64).exp(),
        n_docs: docs.len(),
        n_words,
        ensemble_size: 1,
    })
}

/// Ensemble perplexity: each document's log-probability is the log-mean of
/// `spec.orderings` per-ordering probabilities, with orderings drawn from the
/// document's seeded stream.
pub fn ensemble_perplexity<F>(
    docs: &[Document],
    spec: &EnsembleSpec,
    mut seq_logprob: F,
) -> Result<PerplexityReport>
where
    F: FnMut(&[u32]) -> Result<f64>,
{
    let mut report = perplexity(docs, |doc| {
        let orderings = spec.doc_orderings(&doc.counts(), &doc.source_id)?;
        let members = orderings
            .iter()
            .map(|ordering| seq_logprob(ordering))
            .collect::<Result<Vec<f64>>>()?;
        Ok(log_mean_exp(&members))
    })?;
    report.ensemble_size = spec.orderings;
    Ok(report)
}

/// One precision/recall point at a database-rank cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrPoint {
    pub cutoff: usize,
    pub recall: f64,
    pub precision: f64,
}

/// A precision/recall curve averaged per query label, then over queries.
#[derive(Clone, Debug, Default)]
pub struct PRCurve {
    pub points: Vec<PrPoint>,
    pub n_queries: usize,
    pub warnings: Vec<String>,
}

/// Cosine similarity, or `None` when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some(dot / (na.sqrt() * nb.sqrt()))
    }
}

/// Ranks the database by cosine similarity per query, computes per-label
/// precision/recall at each cutoff (documents sharing the label are the
/// relevant set), averages curves over the query's labels and then over
/// queries.
///
/// Ties are broken by ascending database position; zero-norm vectors rank
/// last with similarity −∞ and produce a warning. A query label absent from
/// the database contributes an all-zero curve.
pub fn retrieval_pr(
    query_reps: &[Vec<f64>],
    db_reps: &[Vec<f64>],
    query_labels: &[Vec<u32>],
    db_labels: &[Vec<u32>],
    cutoffs: &[usize],
) -> Result<PRCurve> {
    if query_reps.len() != query_labels.len() || db_reps.len() != db_labels.len() {
        return Err(Error::Config(
            "representation and label counts differ".into(),
        ));
    }
    if query_reps.is_empty() || db_reps.is_empty() {
        return Err(Error::EmptyDocumentSet);
    }
    let width = db_reps[0].len();
    if query_reps.iter().chain(db_reps).any(|r| r.len() != width) {
        return Err(Error::Config("representation widths differ".into()));
    }
    if let Some(i) = db_labels.iter().position(Vec::is_empty) {
        return Err(Error::Config(format!(
            "database document {i} has no labels"
        )));
    }
    let mut cutoffs: Vec<usize> = cutoffs
        .iter()
        .map(|&c| c.min(db_reps.len()))
        .filter(|&c| c > 0)
        .collect();
    cutoffs.sort_unstable();
    cutoffs.dedup();
    if cutoffs.is_empty() {
        return Err(Error::Config("no usable cutoffs".into()));
    }

    let mut warnings = Vec::new();
    let mut global = vec![(0.0f64, 0.0f64); cutoffs.len()];
    for (q, (query, labels)) in query_reps.iter().zip(query_labels).enumerate() {
        let mut sims: Vec<(f64, usize)> = db_reps
            .iter()
            .enumerate()
            .map(|(i, db)| match cosine(query, db) {
                Some(s) => (s, i),
                None => {
                    warnings.push(format!(
                        "query {q}: database document {i} has zero norm; ranked last"
                    ));
                    (f64::NEG_INFINITY, i)
                }
            })
            .collect();
        if cosine(query, query).is_none() {
            warnings.push(format!("query {q} has zero norm"));
        }
        sims.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

        let mut query_curve = vec![(0.0f64, 0.0f64); cutoffs.len()];
        for &label in labels {
            let relevant_total = db_labels.iter().filter(|ls| ls.contains(&label)).count();
            let mut hits = 0usize;
            let mut rank = 0usize;
            for (ci, &cutoff) in cutoffs.iter().enumerate() {
                while rank < cutoff {
                    if db_labels[sims[rank].1].contains(&label) {
                        hits += 1;
                    }
                    rank += 1;
                }
                let precision = hits as f64 / cutoff as f64;
                let recall = if relevant_total == 0 {
                    0.0
                } else {
                    hits as f64 / relevant_total as f64
                };
                query_curve[ci].0 += recall;
                query_curve[ci].1 += precision;
            }
        }
        let n_labels = labels.len().max(1) as f64;
        for (g, q) in global.iter_mut().zip(&query_curve) {
            g.0 += q.0 / n_labels;
            g.1 += q.1 / n_labels;
        }
    }

    let n_queries = query_reps.len();
    let points = cutoffs
        .iter()
        .zip(&global)
        .map(|(&cutoff, &(r, p))| PrPoint {
            cutoff,
            recall: r / n_queries as f64,
            precision: p / n_queries as f64,
        })
        .collect();
    Ok(PRCurve {
        points,
        n_queries,
        warnings,
    })
}

/// A sensible cutoff grid: a coarse 1-2-5 ladder up to the database size,
/// plus every relevant-set size so each label's recall-1 point is on the
/// curve.
pub fn default_cutoffs(
    db_size: usize,
    relevant_counts: impl IntoIterator<Item = usize>,
) -> Vec<usize> {
    let mut cutoffs = Vec::new();
    let mut step = 1usize;
    while step <= db_size {
        cutoffs.push(step);
        cutoffs.push((2 * step).min(db_size));
        cutoffs.push((5 * step).min(db_size));
        step *= 10;
    }
    cutoffs.push(db_size);
    cutoffs.extend(relevant_counts);
    cutoffs.retain(|&c| c >= 1 && c <= db_size);
    cutoffs.sort_unstable();
    cutoffs.dedup();
    cutoffs
}

/// The `k` nearest words to `word` by cosine similarity between embedding
/// columns, excluding the word itself. Ties break on the smaller id;
/// zero-norm columns are skipped.
pub fn nearest_words(embedding: &ParamTensor, word: u32, k: usize) -> Result<Vec<(u32, f64)>> {
    let vocab = embedding.cols();
    if word as usize >= vocab {
        return Err(Error::UnknownWord {
            id: word,
            vocab_size: vocab,
        });
    }
    if k >= vocab {
        return Err(Error::Config(format!(
            "asked for {k} neighbors in a vocabulary of {vocab}"
        )));
    }
    let query = embedding.col_to_vec(word as usize);
    let mut scored: Vec<(u32, f64)> = Vec::with_capacity(vocab - 1);
    for w in 0..vocab as u32 {
        if w == word {
            continue;
        }
        if let Some(sim) = cosine(&query, &embedding.col_to_vec(w as usize)) {
            scored.push((w, sim));
        }
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

/// The `top_k` words with the strongest (signed) connection `W[unit, w]`,
/// ties broken by the smaller id. A topic readout for one hidden unit.
pub fn hidden_unit_topics(embedding: &ParamTensor, unit: usize, top_k: usize) -> Result<Vec<u32>> {
    if unit >= embedding.rows() {
        return Err(Error::Config(format!(
            "hidden unit {unit} out of range for {} units",
            embedding.rows()
        )));
    }
    let row = embedding.row(unit);
    let mut scored: Vec<(u32, f64)> = row
        .iter()
        .enumerate()
        .map(|(w, &v)| (w as u32, v))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(top_k);
    Ok(scored.into_iter().map(|(w, _)| w).collect())
}

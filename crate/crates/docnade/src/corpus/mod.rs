//! Corpus ingestion: vocabularies, documents, count transforms, ordering
//! sampling, histogram splitting and sentence grouping.

pub mod files;
pub mod stopwords;
pub mod synthetic;

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::seeding::{fnv1a64, fnv1a64_extend};
use crate::{Error, Result};

/// Bidirectional token↔id map with training-set frequencies.
///
/// Ids are dense `0..V-1`, assigned by descending frequency with ties broken
/// by lexicographic token order. Id `V` is reserved as the padding id for
/// language-model contexts and is never a real word.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    frequencies: Vec<u64>,
}

impl Vocabulary {
    /// Keeps the `max_size` most frequent tokens of the stream.
    pub fn build<I>(docs: I, max_size: usize) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: IntoIterator,
        <I::Item as IntoIterator>::Item: AsRef<str>,
    {
        if max_size == 0 {
            return Err(Error::Config("vocabulary budget must be at least 1".into()));
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        let mut saw_doc = false;
        for doc in docs {
            saw_doc = true;
            for token in doc {
                *counts.entry(token.as_ref().to_owned()).or_insert(0) += 1;
            }
        }
        if !saw_doc || counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(max_size);

        Ok(Self::from_ranked(ranked))
    }

    fn from_ranked(ranked: Vec<(String, u64)>) -> Self {
        let mut tokens = Vec::with_capacity(ranked.len());
        let mut frequencies = Vec::with_capacity(ranked.len());
        let mut index = HashMap::with_capacity(ranked.len());
        for (id, (token, freq)) in ranked.into_iter().enumerate() {
            index.insert(token.clone(), id as u32);
            tokens.push(token);
            frequencies.push(freq);
        }
        Vocabulary {
            tokens,
            index,
            frequencies,
        }
    }

    /// Builds from an explicit token list (e.g. a vocabulary file). Tokens
    /// must be unique.
    pub fn from_tokens(tokens: Vec<String>, frequencies: Vec<u64>) -> Result<Self> {
        assert_eq!(tokens.len(), frequencies.len());
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, token) in tokens.iter().enumerate() {
            if index.insert(token.clone(), id as u32).is_some() {
                return Err(Error::Config(format!(
                    "duplicate vocabulary token `{token}`"
                )));
            }
        }
        Ok(Vocabulary {
            tokens,
            index,
            frequencies,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn frequency(&self, id: u32) -> u64 {
        self.frequencies.get(id as usize).copied().unwrap_or(0)
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequencies
    }

    /// Frequencies floored at one, for Huffman tree construction.
    pub fn smoothed_frequencies(&self) -> Vec<u64> {
        self.frequencies.iter().map(|&f| f.max(1)).collect()
    }

    /// Reserved padding id (`V`), used only for language-model contexts.
    pub fn padding_id(&self) -> u32 {
        self.tokens.len() as u32
    }

    /// Content hash over the token list; recorded in model files.
    pub fn hash64(&self) -> u64 {
        let mut h = fnv1a64(&(self.tokens.len() as u64).to_le_bytes());
        for token in &self.tokens {
            h = fnv1a64_extend(h, token.as_bytes());
            h = fnv1a64_extend(h, b"\n");
        }
        h
    }
}

/// Sparse non-negative word-count histogram. Entries are always ≥ 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordCounts {
    map: BTreeMap<u32, u32>,
}

impl WordCounts {
    pub fn new() -> Self {
        WordCounts::default()
    }

    pub fn from_ids(ids: &[u32]) -> Self {
        let mut counts = WordCounts::new();
        for &id in ids {
            counts.add(id, 1);
        }
        counts
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut counts = WordCounts::new();
        for (id, n) in pairs {
            counts.add(id, n);
        }
        counts
    }

    pub fn add(&mut self, id: u32, n: u32) {
        if n > 0 {
            *self.map.entry(id).or_insert(0) += n;
        }
    }

    pub fn count(&self, id: u32) -> u32 {
        self.map.get(&id).copied().unwrap_or(0)
    }

    /// Iterates `(id, count)` in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.map.iter().map(|(&id, &n)| (id, n))
    }

    /// Number of distinct words.
    pub fn distinct(&self) -> usize {
        self.map.len()
    }

    /// Total word count `D`.
    pub fn total(&self) -> usize {
        self.map.values().map(|&n| n as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn max_id(&self) -> Option<u32> {
        self.map.keys().next_back().copied()
    }

    /// Expands to the id sequence in ascending id order.
    pub fn expand(&self) -> Vec<u32> {
        let mut ids = Vec::with_capacity(self.total());
        for (id, n) in self.iter() {
            ids.extend(std::iter::repeat_n(id, n as usize));
        }
        ids
    }
}

impl FromIterator<(u32, u32)> for WordCounts {
    fn from_iter<T: IntoIterator<Item = (u32, u32)>>(iter: T) -> Self {
        WordCounts::from_pairs(iter)
    }
}

/// A document is either an ordered word-id sequence or a bag of counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DocBody {
    Sequence(Vec<u32>),
    Bag(WordCounts),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub source_id: String,
    /// Sorted, deduplicated label ids; may be empty.
    pub labels: Vec<u32>,
    pub body: DocBody,
}

impl Document {
    pub fn sequence(source_id: impl Into<String>, labels: Vec<u32>, ids: Vec<u32>) -> Self {
        Document {
            source_id: source_id.into(),
            labels: normalize_labels(labels),
            body: DocBody::Sequence(ids),
        }
    }

    pub fn bag(source_id: impl Into<String>, labels: Vec<u32>, counts: WordCounts) -> Self {
        Document {
            source_id: source_id.into(),
            labels: normalize_labels(labels),
            body: DocBody::Bag(counts),
        }
    }

    /// Document length `D`.
    pub fn word_count(&self) -> usize {
        match &self.body {
            DocBody::Sequence(ids) => ids.len(),
            DocBody::Bag(counts) => counts.total(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.word_count() == 0
    }

    /// The count histogram, built from the sequence when needed.
    pub fn counts(&self) -> WordCounts {
        match &self.body {
            DocBody::Sequence(ids) => WordCounts::from_ids(ids),
            DocBody::Bag(counts) => counts.clone(),
        }
    }

    pub fn ids(&self) -> Option<&[u32]> {
        match &self.body {
            DocBody::Sequence(ids) => Some(ids),
            DocBody::Bag(_) => None,
        }
    }

    pub fn max_id(&self) -> Option<u32> {
        match &self.body {
            DocBody::Sequence(ids) => ids.iter().max().copied(),
            DocBody::Bag(counts) => counts.max_id(),
        }
    }

    pub fn validate_ids(&self, vocab_size: usize) -> Result<()> {
        if let Some(id) = self.max_id() {
            if id as usize >= vocab_size {
                return Err(Error::UnknownWord { id, vocab_size });
            }
        }
        Ok(())
    }
}

fn normalize_labels(mut labels: Vec<u32>) -> Vec<u32> {
    labels.sort_unstable();
    labels.dedup();
    labels
}

/// A document histogram split into a context (left) and a target side
/// (right). `split_pos` is the 1-based position the targets are predicted
/// at: `Σ left = split_pos − 1` and `Σ right = total − split_pos + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitContext {
    pub left: WordCounts,
    pub right: WordCounts,
    pub split_pos: usize,
    pub total: usize,
}

/// Base of the count-compression logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogBase {
    Natural,
    Ten,
}

impl LogBase {
    pub fn name(self) -> &'static str {
        match self {
            LogBase::Natural => "e",
            LogBase::Ten => "10",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "e" | "natural" => Ok(LogBase::Natural),
            "10" => Ok(LogBase::Ten),
            other => Err(Error::Config(format!("unknown log base `{other}`"))),
        }
    }
}

/// Replaces each count `n` by `round(log(1 + n))`, dropping entries that
/// round to zero.
pub fn log_count_transform(counts: &WordCounts, base: LogBase) -> WordCounts {
    let mut out = WordCounts::new();
    for (id, n) in counts.iter() {
        let x = 1.0 + f64::from(n);
        let compressed = match base {
            LogBase::Natural => x.ln(),
            LogBase::Ten => x.log10(),
        }
        .round() as u32;
        out.add(id, compressed);
    }
    out
}

/// A uniformly random permutation of the bag's word multiset.
pub fn sample_ordering<R: Rng>(counts: &WordCounts, rng: &mut R) -> Result<Vec<u32>> {
    if counts.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let mut ids = counts.expand();
    ids.shuffle(rng);
    Ok(ids)
}

/// Histogram-split approximation: for each word with count `n`, the left
/// count is drawn from `Uniform{0..n}` independently. The right side may be
/// empty (callers resample in that case).
pub fn split_histogram<R: Rng>(counts: &WordCounts, rng: &mut R) -> Result<SplitContext> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyDocument);
    }
    let mut left = WordCounts::new();
    let mut right = WordCounts::new();
    for (id, n) in counts.iter() {
        let k = rng.random_range(0..=n);
        left.add(id, k);
        right.add(id, n - k);
    }
    let split_pos = 1 + left.total();
    Ok(SplitContext {
        left,
        right,
        split_pos,
        total,
    })
}

/// Splits an ordered sequence before 1-based position `split_pos`.
pub fn split_at(seq: &[u32], split_pos: usize) -> SplitContext {
    assert!(
        (1..=seq.len()).contains(&split_pos),
        "split position {split_pos} outside 1..={}",
        seq.len()
    );
    SplitContext {
        left: WordCounts::from_ids(&seq[..split_pos - 1]),
        right: WordCounts::from_ids(&seq[split_pos - 1..]),
        split_pos,
        total: seq.len(),
    }
}

/// Exact split sampling: draws a uniform ordering, then a uniform split
/// position in `1..=D`. The right side is never empty.
pub fn sample_ordered_split<R: Rng>(counts: &WordCounts, rng: &mut R) -> Result<SplitContext> {
    let seq = sample_ordering(counts, rng)?;
    let split_pos = rng.random_range(1..=seq.len());
    Ok(split_at(&seq, split_pos))
}

/// Concatenates consecutive non-overlapping blocks of `group_size` sentences
/// into pseudo-documents, preserving word order. A final partial block is
/// kept as a shorter pseudo-document.
pub fn group_sentences(sentences: &[Document], group_size: usize) -> Vec<Document> {
    assert!(group_size >= 1, "group size must be at least 1");
    sentences
        .chunks(group_size)
        .map(|chunk| {
            let mut ids = Vec::new();
            let mut labels = Vec::new();
            for sentence in chunk {
                match &sentence.body {
                    DocBody::Sequence(s) => ids.extend_from_slice(s),
                    DocBody::Bag(_) => panic!("sentence grouping requires sequence documents"),
                }
                labels.extend_from_slice(&sentence.labels);
            }
            Document::sequence(chunk[0].source_id.clone(), labels, ids)
        })
        .collect()
}

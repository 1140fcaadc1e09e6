//! Seeded synthetic corpora with planted topic structure, used by the
//! examples and the test suites.

use rand::Rng;

use super::{Document, WordCounts};
use crate::seeding::rng_for;

/// A corpus of bag documents where each document draws most of its words from
/// one topic's block of the vocabulary.
#[derive(Clone, Debug)]
pub struct TopicCorpusConfig {
    pub vocab_size: usize,
    pub n_topics: usize,
    pub n_docs: usize,
    /// Inclusive document-length range.
    pub doc_len: (usize, usize),
    /// Probability that a word ignores the topic and is drawn from the whole
    /// vocabulary.
    pub noise: f64,
    pub seed: u64,
}

impl TopicCorpusConfig {
    fn topic_block(&self, topic: usize) -> (u32, u32) {
        let per_topic = self.vocab_size / self.n_topics;
        let start = (topic * per_topic) as u32;
        let end = if topic + 1 == self.n_topics {
            self.vocab_size as u32
        } else {
            ((topic + 1) * per_topic) as u32
        };
        (start, end)
    }
}

/// Generates labeled bag documents; the label is the topic id.
pub fn topic_corpus(config: &TopicCorpusConfig) -> Vec<Document> {
    let mut rng = rng_for(config.seed, "topic-corpus", 0);
    (0..config.n_docs)
        .map(|i| {
            let topic = i % config.n_topics;
            let (start, end) = config.topic_block(topic);
            let len = rng.random_range(config.doc_len.0..=config.doc_len.1);
            let mut counts = WordCounts::new();
            for _ in 0..len {
                let id = if rng.random_bool(config.noise) {
                    rng.random_range(0..config.vocab_size as u32)
                } else {
                    rng.random_range(start..end)
                };
                counts.add(id, 1);
            }
            Document::bag(format!("doc{i:05}"), vec![topic as u32], counts)
        })
        .collect()
}

/// A sentence corpus for language-model experiments: consecutive runs of
/// `sentences_per_doc` sentences share one underlying topic, so grouping
/// adjacent sentences recovers topically coherent pseudo-documents.
#[derive(Clone, Debug)]
pub struct SentenceCorpusConfig {
    pub vocab_size: usize,
    pub n_topics: usize,
    /// Number of underlying documents; each contributes a run of sentences.
    pub n_docs: usize,
    pub sentences_per_doc: usize,
    /// Inclusive sentence-length range.
    pub sentence_len: (usize, usize),
    pub noise: f64,
    pub seed: u64,
}

/// Generates sequence documents, one per sentence, in corpus order.
pub fn topic_sentences(config: &SentenceCorpusConfig) -> Vec<Document> {
    let mut rng = rng_for(config.seed, "sentence-corpus", 0);
    let per_topic = config.vocab_size / config.n_topics;
    let mut sentences = Vec::with_capacity(config.n_docs * config.sentences_per_doc);
    for doc in 0..config.n_docs {
        let topic = doc % config.n_topics;
        let start = (topic * per_topic) as u32;
        let end = if topic + 1 == config.n_topics {
            config.vocab_size as u32
        } else {
            ((topic + 1) * per_topic) as u32
        };
        for s in 0..config.sentences_per_doc {
            let len = rng.random_range(config.sentence_len.0..=config.sentence_len.1);
            let ids: Vec<u32> = (0..len)
                .map(|_| {
                    if rng.random_bool(config.noise) {
                        rng.random_range(0..config.vocab_size as u32)
                    } else {
                        rng.random_range(start..end)
                    }
                })
                .collect();
            sentences.push(Document::sequence(
                format!("doc{doc:04}.s{s}"),
                vec![topic as u32],
                ids,
            ));
        }
    }
    sentences
}

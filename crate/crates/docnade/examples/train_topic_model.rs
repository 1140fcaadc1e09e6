//! Train a DocNADE topic model on a synthetic two-topic corpus and compare
//! its held-out perplexity against a unigram baseline.
//!
//! ```bash
//! cargo run --release --example train_topic_model
//! ```

use docnade::corpus::synthetic::{topic_corpus, TopicCorpusConfig};
use docnade::eval::{ensemble_perplexity, perplexity};
use docnade::nn::Activation;
use docnade::training::{train_docnade, OptimizerConfig, TrainOptions};
use docnade::tree::BinaryWordTree;
use docnade::{DocNadeModel, EnsembleSpec};

fn main() -> docnade::Result<()> {
    let config = TopicCorpusConfig {
        vocab_size: 50,
        n_topics: 2,
        n_docs: 260,
        doc_len: (20, 40),
        noise: 0.05,
        seed: 1,
    };
    let corpus = topic_corpus(&config);
    let (train, held_out) = corpus.split_at(200);
    println!(
        "corpus: {} train / {} held-out documents, V = {}",
        train.len(),
        held_out.len(),
        config.vocab_size
    );

    let tree = BinaryWordTree::random(config.vocab_size, 2)?;
    let mut model = DocNadeModel::new(16, tree, Activation::Sigmoid, 2);
    let options = TrainOptions {
        epochs: 100,
        batch_size: 16,
        seed: 3,
        optimizer: OptimizerConfig::adam(3e-3),
        patience: None,
    };
    let stats = train_docnade(&mut model, train, Some(held_out), &options)?;
    for s in stats.iter().step_by(20).chain(stats.last()) {
        println!(
            "epoch {:3}: mean NLL/word {:.4}, held-out perplexity {:.2}",
            s.epoch,
            s.mean_loss,
            s.validation_perplexity.unwrap()
        );
    }

    // Unigram maximum likelihood on the same training split.
    let mut counts = vec![0u64; config.vocab_size];
    let mut total = 0u64;
    for doc in train {
        for (w, n) in doc.counts().iter() {
            counts[w as usize] += u64::from(n);
            total += u64::from(n);
        }
    }
    let unigram = perplexity(held_out, |doc| {
        Ok(doc
            .counts()
            .iter()
            .map(|(w, n)| f64::from(n) * (counts[w as usize] as f64 / total as f64).ln())
            .sum())
    })?
    .perplexity;

    let docnade = ensemble_perplexity(held_out, &EnsembleSpec::new(8, 4), |seq| {
        model.doc_logprob(seq)
    })?
    .perplexity;
    println!("held-out perplexity: docnade {docnade:.2} vs unigram {unigram:.2}");

    // The document representation separates the two topics.
    let rep_a = model.doc_representation(&held_out[0])?;
    let rep_b = model.doc_representation(&held_out[1])?;
    let sim = docnade::eval::cosine(&rep_a, &rep_b).unwrap();
    println!(
        "representation cosine between a topic-{} and a topic-{} document: {sim:.3}",
        held_out[0].labels[0], held_out[1].labels[0]
    );
    Ok(())
}

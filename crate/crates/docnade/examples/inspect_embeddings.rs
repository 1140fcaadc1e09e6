//! Qualitative model inspection: nearest words in embedding space and the
//! strongest-connected words of individual hidden units.
//!
//! ```bash
//! cargo run --release --example inspect_embeddings
//! ```

use docnade::corpus::synthetic::{topic_corpus, TopicCorpusConfig};
use docnade::eval::{hidden_unit_topics, nearest_words};
use docnade::nn::Activation;
use docnade::training::{train_docnade, OptimizerConfig, TrainOptions};
use docnade::tree::BinaryWordTree;
use docnade::DocNadeModel;

fn main() -> docnade::Result<()> {
    // Three topics over 30 words: ids 0..9, 10..19, 20..29.
    let config = TopicCorpusConfig {
        vocab_size: 30,
        n_topics: 3,
        n_docs: 150,
        doc_len: (12, 24),
        noise: 0.05,
        seed: 40,
    };
    let corpus = topic_corpus(&config);

    let tree = BinaryWordTree::random(config.vocab_size, 41)?;
    let mut model = DocNadeModel::new(10, tree, Activation::Sigmoid, 41);
    let options = TrainOptions {
        epochs: 120,
        batch_size: 16,
        seed: 42,
        optimizer: OptimizerConfig::adam(5e-3),
        patience: None,
    };
    train_docnade(&mut model, &corpus, None, &options)?;

    println!("nearest words (same topic block = same tens digit):");
    for word in [0u32, 12, 25] {
        let neighbors = nearest_words(&model.embedding, word, 5)?;
        let formatted: Vec<String> = neighbors
            .iter()
            .map(|(w, sim)| format!("w{w:02} ({sim:+.2})"))
            .collect();
        println!("  w{word:02}: {}", formatted.join(", "));
    }

    println!("\nhidden-unit topics (top-6 words by connection strength):");
    for unit in 0..4 {
        let words = hidden_unit_topics(&model.embedding, unit, 6)?;
        let formatted: Vec<String> = words.iter().map(|w| format!("w{w:02}")).collect();
        println!("  unit {unit}: {}", formatted.join(" "));
    }
    Ok(())
}

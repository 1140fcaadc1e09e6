//! Document retrieval with learned representations: rank a database by
//! cosine similarity to each query and average precision/recall curves per
//! label, then per query.
//!
//! ```bash
//! cargo run --release --example document_retrieval
//! ```

use docnade::corpus::synthetic::{topic_corpus, TopicCorpusConfig};
use docnade::eval::{default_cutoffs, retrieval_pr};
use docnade::nn::Activation;
use docnade::training::{train_docnade, OptimizerConfig, TrainOptions};
use docnade::tree::BinaryWordTree;
use docnade::DocNadeModel;

fn main() -> docnade::Result<()> {
    let config = TopicCorpusConfig {
        vocab_size: 60,
        n_topics: 3,
        n_docs: 160,
        doc_len: (15, 30),
        noise: 0.1,
        seed: 30,
    };
    let corpus = topic_corpus(&config);
    let (database, queries) = corpus.split_at(120);

    let tree = BinaryWordTree::random(config.vocab_size, 31)?;
    let mut model = DocNadeModel::new(24, tree, Activation::Sigmoid, 31);
    let options = TrainOptions {
        epochs: 80,
        batch_size: 16,
        seed: 32,
        optimizer: OptimizerConfig::adam(3e-3),
        patience: None,
    };
    train_docnade(&mut model, database, None, &options)?;

    let db_reps: Vec<Vec<f64>> = database
        .iter()
        .map(|d| model.doc_representation(d))
        .collect::<docnade::Result<_>>()?;
    let query_reps: Vec<Vec<f64>> = queries
        .iter()
        .map(|d| model.doc_representation(d))
        .collect::<docnade::Result<_>>()?;
    let db_labels: Vec<Vec<u32>> = database.iter().map(|d| d.labels.clone()).collect();
    let query_labels: Vec<Vec<u32>> = queries.iter().map(|d| d.labels.clone()).collect();

    let relevant_counts = query_labels
        .iter()
        .flatten()
        .map(|&label| db_labels.iter().filter(|ls| ls.contains(&label)).count());
    let cutoffs = default_cutoffs(database.len(), relevant_counts);
    let curve = retrieval_pr(&query_reps, &db_reps, &query_labels, &db_labels, &cutoffs)?;

    println!(
        "{} queries against {} documents",
        queries.len(),
        database.len()
    );
    println!("cutoff  recall  precision");
    for p in &curve.points {
        println!("{:>6}  {:.4}  {:.4}", p.cutoff, p.recall, p.precision);
    }
    // Random ranking would give precision ≈ 1/3 at every cutoff here.
    Ok(())
}

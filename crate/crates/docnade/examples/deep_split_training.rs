//! Train a two-layer DeepDocNADE with the histogram-split objective and
//! sweep the ordering-ensemble size used at evaluation time.
//!
//! ```bash
//! cargo run --release --example deep_split_training
//! ```

use docnade::corpus::synthetic::{topic_corpus, TopicCorpusConfig};
use docnade::eval::ensemble_perplexity;
use docnade::nn::Activation;
use docnade::training::{train_deep, OptimizerConfig, TrainOptions};
use docnade::{DeepDocNadeModel, EnsembleSpec, SplitStrategy};

fn main() -> docnade::Result<()> {
    let config = TopicCorpusConfig {
        vocab_size: 40,
        n_topics: 2,
        n_docs: 120,
        doc_len: (10, 25),
        noise: 0.1,
        seed: 7,
    };
    let corpus = topic_corpus(&config);
    let (train, held_out) = corpus.split_at(100);

    let mut model = DeepDocNadeModel::new(config.vocab_size, &[32, 16], Activation::Tanh, 8)?;
    println!(
        "DeepDocNADE with layers {:?}, split strategy: histogram",
        model.hidden_sizes()
    );
    let options = TrainOptions {
        epochs: 60,
        batch_size: 16,
        seed: 9,
        optimizer: OptimizerConfig::adam(3e-3),
        patience: None,
    };
    let stats = train_deep(
        &mut model,
        train,
        Some(held_out),
        SplitStrategy::Histogram,
        &options,
    )?;
    for s in stats.iter().step_by(15).chain(stats.last()) {
        println!(
            "epoch {:3}: mean split loss/word {:.4}, held-out perplexity {:.2}",
            s.epoch,
            s.mean_loss,
            s.validation_perplexity.unwrap()
        );
    }

    // Averaging over more word orderings tightens the document probability;
    // past M = 128 the curve is flat.
    println!("\nensemble-size sweep on the held-out split:");
    for m in [1usize, 2, 4, 16, 32, 64, 128, 256] {
        let report = ensemble_perplexity(held_out, &EnsembleSpec::new(m, 10), |seq| {
            model.ordered_doc_logprob(seq)
        })?;
        println!("  M = {m:3}: perplexity {:.3}", report.perplexity);
    }
    Ok(())
}

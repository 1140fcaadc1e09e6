//! The document-context language model against its pure n-gram ablation.
//!
//! Adjacent sentences are grouped into pseudo-documents; the model sums a
//! bag-of-words context over everything seen so far in the pseudo-document
//! with an n-gram term over the last few words. Zeroing the document
//! context recovers a plain feed-forward n-gram model.
//!
//! ```bash
//! cargo run --release --example language_model
//! ```

use docnade::corpus::group_sentences;
use docnade::corpus::synthetic::{topic_sentences, SentenceCorpusConfig};
use docnade::eval::perplexity;
use docnade::nn::Activation;
use docnade::training::{train_lm, OptimizerConfig, TrainOptions};
use docnade::tree::ClassPartition;
use docnade::DocNadeLmModel;

fn main() -> docnade::Result<()> {
    let config = SentenceCorpusConfig {
        vocab_size: 40,
        n_topics: 4,
        n_docs: 56,
        sentences_per_doc: 5,
        sentence_len: (6, 10),
        noise: 0.25,
        seed: 20,
    };
    let sentences = topic_sentences(&config);

    for group_size in [1usize, 5] {
        let pseudo_docs = group_sentences(&sentences, group_size);
        let split = pseudo_docs.len() * 4 / 5;
        let (train, held_out) = pseudo_docs.split_at(split);

        let mut ppls = Vec::new();
        for use_context in [true, false] {
            let partition = ClassPartition::build(config.vocab_size)?;
            let mut model =
                DocNadeLmModel::new(16, 3, partition, Activation::Sigmoid, use_context, 21)?;
            let options = TrainOptions {
                epochs: 120,
                batch_size: 8,
                seed: 22,
                optimizer: OptimizerConfig::adam(3e-3),
                patience: None,
            };
            train_lm(&mut model, train, None, &options)?;
            let ppl = perplexity(held_out, |doc| model.doc_logprob(doc.ids().unwrap()))?.perplexity;
            ppls.push(ppl);
        }
        println!(
            "grouping {group_size} sentence(s)/document: DocNADE-LM {:.2} vs FFN {:.2} \
             (document context changes perplexity by {:+.1}%)",
            ppls[0],
            ppls[1],
            (ppls[0] / ppls[1] - 1.0) * 100.0
        );
    }
    Ok(())
}

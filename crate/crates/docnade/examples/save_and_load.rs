//! Model serialization: deterministic bytes, bit-exact round trips, and the
//! vocabulary-hash guard that pins a model to the dictionary it was trained
//! with.
//!
//! ```bash
//! cargo run --example save_and_load
//! ```

use docnade::corpus::synthetic::{topic_corpus, TopicCorpusConfig};
use docnade::corpus::Vocabulary;
use docnade::model_io::{self, Model, ModelMeta};
use docnade::nn::Activation;
use docnade::training::{train_docnade, OptimizerConfig, TrainOptions};
use docnade::tree::BinaryWordTree;
use docnade::DocNadeModel;

fn main() -> docnade::Result<()> {
    let vocab = Vocabulary::build(
        [(0..20).map(|i| format!("word{i:02}")).collect::<Vec<_>>()],
        20,
    )?;
    let corpus = topic_corpus(&TopicCorpusConfig {
        vocab_size: 20,
        n_topics: 2,
        n_docs: 40,
        doc_len: (5, 12),
        noise: 0.1,
        seed: 50,
    });

    let tree = BinaryWordTree::random(20, 51)?;
    let mut model = DocNadeModel::new(8, tree, Activation::Sigmoid, 51);
    let options = TrainOptions {
        epochs: 10,
        batch_size: 8,
        seed: 52,
        optimizer: OptimizerConfig::adam(1e-2),
        patience: None,
    };
    train_docnade(&mut model, &corpus, None, &options)?;

    let probe = vec![3u32, 17, 3];
    let logprob_before = model.doc_logprob(&probe)?;

    let dir = std::env::temp_dir().join("docnade-example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("model.dnade");
    let meta = ModelMeta::new(vocab.hash64(), 52);
    let model = Model::DocNade(model);
    model_io::save(&model, &meta, &path)?;
    println!(
        "saved {} ({} bytes)",
        path.display(),
        std::fs::metadata(&path).unwrap().len()
    );

    // Same model, same bytes.
    let bytes_a = model_io::encode(&model, &meta);
    let bytes_b = model_io::encode(&model, &meta);
    println!("deterministic encoding: {}", bytes_a == bytes_b);

    let (loaded, loaded_meta) = model_io::load(&path)?;
    let Model::DocNade(loaded) = loaded else {
        unreachable!()
    };
    let logprob_after = loaded.doc_logprob(&probe)?;
    println!(
        "round-trip bit-exact: {}",
        logprob_before.to_bits() == logprob_after.to_bits()
    );

    // Evaluating against a different dictionary is refused outright.
    let other = Vocabulary::build(
        [(0..20).map(|i| format!("other{i:02}")).collect::<Vec<_>>()],
        20,
    )?;
    match loaded_meta.check_vocab(&other) {
        Err(e) => println!("wrong vocabulary rejected: {e}"),
        Ok(()) => unreachable!("hash collision"),
    }

    // Any single corrupted byte is caught by the trailing checksum.
    let mut corrupted = bytes_a.clone();
    let middle = corrupted.len() / 2;
    corrupted[middle] ^= 0x01;
    println!(
        "single-byte corruption rejected: {}",
        model_io::decode(&corrupted).is_err()
    );
    std::fs::remove_file(&path).ok();
    Ok(())
}

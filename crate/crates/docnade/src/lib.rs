//! Neural autoregressive document models.
//!
//! Three model families share a small hand-rolled numerical kernel:
//!
//! * [`DocNadeModel`] — single hidden layer over a summed word-embedding
//!   context, with the output distribution factorized over a probabilistic
//!   binary word tree. Computes exact per-document likelihoods in
//!   `O(D · H · log V)`.
//! * [`DeepDocNadeModel`] — multi-layer variant trained on random
//!   context/target splits of the word histogram, with a flat softmax output
//!   and ordering-ensemble likelihood evaluation.
//! * [`DocNadeLmModel`] — a language model whose hidden state sums an
//!   unbounded bag-of-words document context with an n-gram term, under a
//!   two-level hierarchical softmax.
//!
//! Corpus ingestion and file formats live in [`corpus`], output-layer tree
//! structures in [`tree`], the numerical kernel (tensors, optimizers,
//! gradient checking) in [`nn`], evaluation protocols (perplexity, retrieval
//! precision/recall, embedding inspection) in [`eval`], serialization in
//! [`model_io`], and training loops in [`training`].
//!
//! The `examples/` directory holds one runnable program per capability:
//!
//! ```bash
//! cargo run --release --example train_topic_model    # DocNADE vs a unigram baseline
//! cargo run --release --example deep_split_training  # split training + ensemble sweep
//! cargo run --release --example language_model       # document context vs FFN ablation
//! cargo run --release --example document_retrieval   # PR curves from representations
//! cargo run --release --example inspect_embeddings   # nearest words, unit topics
//! cargo run --release --example exact_bag_likelihood # enumeration vs sampling
//! cargo run --example word_trees                     # random vs Huffman output trees
//! cargo run --example gradient_checking              # finite-difference validation
//! cargo run --example save_and_load                  # serialization guarantees
//! ```
//!
//! The `docnade` binary wires everything into `ingest`/`train`/`eval`/
//! `inspect` subcommands; see the README for the full walkthrough.

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod model_io;
pub mod models;
pub mod nn;
pub mod seeding;
pub mod training;
pub mod tree;

mod error;

pub use error::{Error, Result};
pub use models::deep::{DeepDocNadeModel, EnsembleSpec, SplitStrategy};
pub use models::docnade::DocNadeModel;
pub use models::lm::DocNadeLmModel;

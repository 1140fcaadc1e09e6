//! Epoch/batch training loops shared by the CLI and the examples.
//!
//! Gradients accumulate over a mini-batch of documents and are averaged
//! before one optimizer step. Orderings are resampled fresh for every
//! document in every epoch. All randomness derives from the run seed, so a
//! repeated run is bit-identical.

use rand::seq::SliceRandom;

use crate::corpus::{sample_ordering, Document};
use crate::eval::{ensemble_perplexity, perplexity};
use crate::models::deep::{DeepDocNadeModel, EnsembleSpec, SplitStrategy};
use crate::models::docnade::DocNadeModel;
use crate::models::lm::DocNadeLmModel;
use crate::nn::{Adam, Optimizer, Parameterized, Sgd};
use crate::seeding::rng_for;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerConfig {
    pub fn adam(learning_rate: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn sgd(learning_rate: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn build(&self) -> Optimizer {
        match self.kind {
            OptimizerKind::Sgd => Optimizer::Sgd(Sgd::new(self.learning_rate)),
            OptimizerKind::Adam => Optimizer::Adam(Adam::with_hyperparams(
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.epsilon,
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    /// Stop after this many epochs without a validation improvement.
    pub patience: Option<usize>,
}

impl TrainOptions {
    pub fn new(epochs: usize, seed: u64, optimizer: OptimizerConfig) -> Self {
        TrainOptions {
            epochs,
            batch_size: 64,
            seed,
            optimizer,
            patience: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub validation_perplexity: Option<f64>,
}

/// Early-stop bookkeeping over a stream of validation scores.
struct Patience {
    limit: Option<usize>,
    best: f64,
    since_best: usize,
}

impl Patience {
    fn new(limit: Option<usize>) -> Self {
        Patience {
            limit,
            best: f64::INFINITY,
            since_best: 0,
        }
    }

    /// Returns true when training should stop.
    fn observe(&mut self, score: f64) -> bool {
        if score < self.best {
            self.best = score;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        self.limit.is_some_and(|limit| self.since_best > limit)
    }
}

fn non_empty(docs: &[Document]) -> Vec<&Document> {
    docs.iter().filter(|d| !d.is_empty()).collect()
}

fn averaged_step<M: Parameterized>(
    model: &mut M,
    optimizer: &mut Optimizer,
    batch_len: usize,
) -> Result<()> {
    let scale = 1.0 / batch_len as f64;
    for p in model.params_mut() {
        for g in &mut p.grad {
            *g *= scale;
        }
    }
    optimizer.step(&mut model.params_mut())
}

pub fn train_docnade(
    model: &mut DocNadeModel,
    train: &[Document],
    valid: Option<&[Document]>,
    options: &TrainOptions,
) -> Result<Vec<EpochStats>> {
    let docs = non_empty(train);
    if docs.is_empty() {
        return Err(Error::EmptyDocumentSet);
    }
    let mut optimizer = options.optimizer.build();
    let mut stats = Vec::with_capacity(options.epochs);
    let mut patience = Patience::new(options.patience);
    for epoch in 0..options.epochs {
        let mut order: Vec<usize> = (0..docs.len()).collect();
        order.shuffle(&mut rng_for(options.seed, "doc-order", epoch as u64));
        let mut ordering_rng = rng_for(options.seed, "orderings", epoch as u64);
        let mut total = 0.0;
        for batch in order.chunks(options.batch_size) {
            model.zero_grads();
            for &idx in batch {
                let seq = sample_ordering(&docs[idx].counts(), &mut ordering_rng)?;
                total += model.nll_backward(&seq)? / seq.len() as f64;
            }
            averaged_step(model, &mut optimizer, batch.len())?;
        }
        let mean_loss = total / docs.len() as f64;
        let validation = match valid {
            Some(valid_docs) => {
                let spec = EnsembleSpec::new(1, options.seed);
                let report = ensemble_perplexity(valid_docs, &spec, |seq| model.doc_logprob(seq))?;
                Some(report.perplexity)
            }
            None => None,
        };
        stats.push(EpochStats {
            epoch,
            mean_loss,
            validation_perplexity: validation,
        });
        if let Some(score) = validation {
            if patience.observe(score) {
                break;
            }
        }
    }
    Ok(stats)
}

pub fn train_deep(
    model: &mut DeepDocNadeModel,
    train: &[Document],
    valid: Option<&[Document]>,
    strategy: SplitStrategy,
    options: &TrainOptions,
) -> Result<Vec<EpochStats>> {
    let docs = non_empty(train);
    if docs.is_empty() {
        return Err(Error::EmptyDocumentSet);
    }
    let mut optimizer = options.optimizer.build();
    let mut stats = Vec::with_capacity(options.epochs);
    let mut patience = Patience::new(options.patience);
    for epoch in 0..options.epochs {
        let mut order: Vec<usize> = (0..docs.len()).collect();
        order.shuffle(&mut rng_for(options.seed, "doc-order", epoch as u64));
        let mut split_rng = rng_for(options.seed, "splits", epoch as u64);
        let mut total = 0.0;
        for batch in order.chunks(options.batch_size) {
            model.zero_grads();
            for &idx in batch {
                let counts = docs[idx].counts();
                let split = loop {
                    let candidate = match strategy {
                        SplitStrategy::Histogram => {
                            crate::corpus::split_histogram(&counts, &mut split_rng)?
                        }
                        SplitStrategy::ExactOrdering => {
                            crate::corpus::sample_ordered_split(&counts, &mut split_rng)?
                        }
                    };
                    if !candidate.right.is_empty() {
                        break candidate;
                    }
                };
                total += model.split_backward(&split)? / split.total as f64;
            }
            averaged_step(model, &mut optimizer, batch.len())?;
        }
        let mean_loss = total / docs.len() as f64;
        let validation = match valid {
            Some(valid_docs) => {
                let spec = EnsembleSpec::new(1, options.seed);
                let report =
                    ensemble_perplexity(valid_docs, &spec, |seq| model.ordered_doc_logprob(seq))?;
                Some(report.perplexity)
            }
            None => None,
        };
        stats.push(EpochStats {
            epoch,
            mean_loss,
            validation_perplexity: validation,
        });
        if let Some(score) = validation {
            if patience.observe(score) {
                break;
            }
        }
    }
    Ok(stats)
}

/// Trains on pseudo-documents (already grouped sentences, in sequence form).
pub fn train_lm(
    model: &mut DocNadeLmModel,
    train: &[Document],
    valid: Option<&[Document]>,
    options: &TrainOptions,
) -> Result<Vec<EpochStats>> {
    let docs = non_empty(train);
    if docs.is_empty() {
        return Err(Error::EmptyDocumentSet);
    }
    for doc in &docs {
        if doc.ids().is_none() {
            return Err(Error::Config(format!(
                "language-model training needs sequence documents; `{}` is a bag",
                doc.source_id
            )));
        }
    }
    let mut optimizer = options.optimizer.build();
    let mut stats = Vec::with_capacity(options.epochs);
    let mut patience = Patience::new(options.patience);
    for epoch in 0..options.epochs {
        let mut order: Vec<usize> = (0..docs.len()).collect();
        order.shuffle(&mut rng_for(options.seed, "doc-order", epoch as u64));
        let mut total = 0.0;
        for batch in order.chunks(options.batch_size) {
            model.zero_grads();
            for &idx in batch {
                let seq = docs[idx].ids().unwrap();
                total += model.nll_backward(seq)? / seq.len() as f64;
            }
            averaged_step(model, &mut optimizer, batch.len())?;
        }
        let mean_loss = total / docs.len() as f64;
        let validation = match valid {
            Some(valid_docs) => {
                let report = perplexity(valid_docs, |doc| {
                    model.doc_logprob(doc.ids().expect("sequence document"))
                })?;
                Some(report.perplexity)
            }
            None => None,
        };
        stats.push(EpochStats {
            epoch,
            mean_loss,
            validation_perplexity: validation,
        });
        if let Some(score) = validation {
            if patience.observe(score) {
                break;
            }
        }
    }
    Ok(stats)
}

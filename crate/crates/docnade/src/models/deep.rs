//! Multi-layer document model trained on random context/target splits of the
//! word histogram, with a flat softmax output.
//!
//! Training draws a split of a document's counts into a context (left) and a
//! target side (right); every target word is predicted as if it sat at the
//! split position, and the summed NLL is rescaled by `D / (D − i + 1)` so the
//! expected loss over orderings and split positions equals the
//! ordering-averaged document NLL.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    sample_ordered_split, sample_ordering, split_histogram, Document, SplitContext, WordCounts,
};
use crate::nn::{
    init_params, log_mean_exp, log_softmax_in_place, Activation, InitScheme, Optimizer,
    ParamTensor, Parameterized, Shape,
};
use crate::seeding::{fnv1a64, rng_for};
use crate::{Error, Result};

/// One fully connected hidden layer.
#[derive(Clone, Debug)]
pub struct DeepLayer {
    pub weight: ParamTensor,
    pub bias: ParamTensor,
}

#[derive(Clone, Debug)]
pub struct DeepDocNadeModel {
    vocab_size: usize,
    activation: Activation,
    /// Layer 1 maps the `V`-dimensional histogram; deeper layers are dense.
    pub layers: Vec<DeepLayer>,
    /// `V×H_N` softmax weights.
    pub out_weight: ParamTensor,
    /// Softmax bias, length `V`.
    pub out_bias: ParamTensor,
}

/// How many word orderings to average over, and the seed their sampling
/// derives from. Orderings for a document are a pure function of
/// `(seed, source_id)`, so evaluations are reproducible.
#[derive(Clone, Copy, Debug)]
pub struct EnsembleSpec {
    pub orderings: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(orderings: usize, seed: u64) -> Self {
        assert!(orderings >= 1, "ensemble needs at least one ordering");
        EnsembleSpec { orderings, seed }
    }

    pub fn rng_for_doc(&self, source_id: &str) -> ChaCha8Rng {
        rng_for(self.seed, "ensemble", fnv1a64(source_id.as_bytes()))
    }

    /// The document's ensemble orderings, sampled from its derived stream.
    pub fn doc_orderings(&self, counts: &WordCounts, source_id: &str) -> Result<Vec<Vec<u32>>> {
        let mut rng = self.rng_for_doc(source_id);
        (0..self.orderings)
            .map(|_| sample_ordering(counts, &mut rng))
            .collect()
    }
}

/// Context-sampling strategy for training updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitStrategy {
    /// Split the histogram directly: per word, a uniform share goes left.
    /// Fast default; an approximation of ordering-then-split.
    Histogram,
    /// Sample a full ordering, then a uniform split position. Unbiased for
    /// the ordering-averaged NLL.
    ExactOrdering,
}

impl SplitStrategy {
    pub fn name(self) -> &'static str {
        match self {
            SplitStrategy::Histogram => "histogram",
            SplitStrategy::ExactOrdering => "exact-ordering",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "histogram" => Ok(SplitStrategy::Histogram),
            "exact-ordering" => Ok(SplitStrategy::ExactOrdering),
            other => Err(Error::Config(format!("unknown split strategy `{other}`"))),
        }
    }
}

/// Loss rescale for a split at 1-based position `split_pos` of a
/// `total`-word document: `D / (D − i + 1)`.
pub fn split_scale(total: usize, split_pos: usize) -> f64 {
    total as f64 / (total - split_pos + 1) as f64
}

/// Forward activations: every hidden layer plus the output log-distribution.
pub struct DeepForward {
    pub hiddens: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
}

impl DeepDocNadeModel {
    pub fn new(
        vocab_size: usize,
        hidden_sizes: &[usize],
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        if vocab_size < 2 {
            return Err(Error::DegenerateVocabulary(vocab_size));
        }
        if hidden_sizes.is_empty() || hidden_sizes.len() > 3 {
            return Err(Error::Config(format!(
                "unsupported depth: {} hidden layers (supported: 1..=3)",
                hidden_sizes.len()
            )));
        }
        let mut rng = rng_for(seed, "deep-init", 0);
        let mut layers = Vec::with_capacity(hidden_sizes.len());
        let mut fan_in = vocab_size;
        for (n, &width) in hidden_sizes.iter().enumerate() {
            layers.push(DeepLayer {
                weight: init_params(
                    format!("layer{}_weight", n + 1),
                    Shape::Matrix(width, fan_in),
                    InitScheme::UniformFan,
                    &mut rng,
                ),
                bias: ParamTensor::zeros(format!("layer{}_bias", n + 1), Shape::Vector(width)),
            });
            fan_in = width;
        }
        Ok(DeepDocNadeModel {
            vocab_size,
            activation,
            layers,
            out_weight: ParamTensor::zeros("out_weight", Shape::Matrix(vocab_size, fan_in)),
            out_bias: ParamTensor::zeros("out_bias", Shape::Vector(vocab_size)),
        })
    }

    pub fn from_parts(
        vocab_size: usize,
        activation: Activation,
        layers: Vec<DeepLayer>,
        out_weight: ParamTensor,
        out_bias: ParamTensor,
    ) -> Result<Self> {
        if layers.is_empty() || layers.len() > 3 {
            return Err(Error::Config(format!(
                "unsupported depth: {} hidden layers (supported: 1..=3)",
                layers.len()
            )));
        }
        let mut fan_in = vocab_size;
        for layer in &layers {
            if layer.weight.cols() != fan_in || layer.weight.rows() != layer.bias.len() {
                return Err(Error::ShapeMismatch {
                    name: layer.weight.name.clone(),
                    expected: format!("_x{fan_in}"),
                    got: layer.weight.shape.describe(),
                });
            }
            fan_in = layer.weight.rows();
        }
        if out_weight.rows() != vocab_size
            || out_weight.cols() != fan_in
            || out_bias.len() != vocab_size
        {
            return Err(Error::ShapeMismatch {
                name: out_weight.name.clone(),
                expected: format!("{vocab_size}x{fan_in}"),
                got: out_weight.shape.describe(),
            });
        }
        Ok(DeepDocNadeModel {
            vocab_size,
            activation,
            layers,
            out_weight,
            out_bias,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.bias.len()).collect()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn check_counts(&self, counts: &WordCounts) -> Result<()> {
        if let Some(id) = counts.max_id() {
            if id as usize >= self.vocab_size {
                return Err(Error::UnknownWord {
                    id,
                    vocab_size: self.vocab_size,
                });
            }
        }
        Ok(())
    }

    fn first_hidden(&self, hist: &WordCounts) -> Vec<f64> {
        let layer = &self.layers[0];
        let mut pre = layer.bias.values.clone();
        for (w, n) in hist.iter() {
            layer
                .weight
                .add_col_scaled_to(w as usize, f64::from(n), &mut pre);
        }
        self.activation.apply_in_place(&mut pre);
        pre
    }

    /// Hidden layers above the first, plus the output log-softmax.
    fn upper_forward(&self, first: Vec<f64>) -> DeepForward {
        let mut hiddens = vec![first];
        for layer in &self.layers[1..] {
            let prev = hiddens.last().unwrap();
            let mut pre = layer.bias.values.clone();
            for (r, p) in pre.iter_mut().enumerate() {
                *p += crate::nn::dot(layer.weight.row(r), prev);
            }
            self.activation.apply_in_place(&mut pre);
            hiddens.push(pre);
        }
        let top = hiddens.last().unwrap();
        let mut log_probs = self.out_bias.values.clone();
        for (w, lp) in log_probs.iter_mut().enumerate() {
            *lp += crate::nn::dot(self.out_weight.row(w), top);
        }
        log_softmax_in_place(&mut log_probs);
        DeepForward { hiddens, log_probs }
    }

    /// Conditional distribution given a context histogram.
    pub fn forward(&self, hist: &WordCounts) -> Result<DeepForward> {
        self.check_counts(hist)?;
        Ok(self.upper_forward(self.first_hidden(hist)))
    }

    /// Rescaled split loss: `(D/(D−i+1)) · Σ_{w ∈ right} −log p(w | left)`,
    /// with repeated words contributing once per occurrence.
    pub fn split_loss(&self, split: &SplitContext) -> Result<f64> {
        if split.right.is_empty() {
            return Err(Error::EmptyTargetSide);
        }
        self.check_counts(&split.right)?;
        let forward = self.forward(&split.left)?;
        let raw: f64 = split
            .right
            .iter()
            .map(|(w, n)| f64::from(n) * -forward.log_probs[w as usize])
            .sum();
        Ok(split_scale(split.total, split.split_pos) * raw)
    }

    /// Backpropagates one split; gradients accumulate. Returns the loss.
    pub fn split_backward(&mut self, split: &SplitContext) -> Result<f64> {
        if split.right.is_empty() {
            return Err(Error::EmptyTargetSide);
        }
        self.check_counts(&split.left)?;
        self.check_counts(&split.right)?;
        let forward = self.upper_forward(self.first_hidden(&split.left));
        let factor = split_scale(split.total, split.split_pos);
        let n_targets = split.right.total() as f64;

        let mut loss = 0.0;
        // d loss / d logits = factor · (R·softmax − right_counts)
        let mut d_logits: Vec<f64> = forward
            .log_probs
            .iter()
            .map(|&lp| factor * n_targets * lp.exp())
            .collect();
        for (w, n) in split.right.iter() {
            loss += factor * f64::from(n) * -forward.log_probs[w as usize];
            d_logits[w as usize] -= factor * f64::from(n);
        }

        let top = forward.hiddens.last().unwrap();
        let mut d_hidden = vec![0.0; top.len()];
        for (w, &dz) in d_logits.iter().enumerate() {
            self.out_bias.grad[w] += dz;
            for (g, &h) in self.out_weight.grad_row_mut(w).iter_mut().zip(top) {
                *g += dz * h;
            }
            for (dh, &ow) in d_hidden.iter_mut().zip(self.out_weight.row(w)) {
                *dh += dz * ow;
            }
        }

        for n in (0..self.layers.len()).rev() {
            let hidden = &forward.hiddens[n];
            let d_pre: Vec<f64> = d_hidden
                .iter()
                .zip(hidden)
                .map(|(&dh, &h)| dh * self.activation.derivative_from_output(h))
                .collect();
            for (g, &dp) in self.layers[n].bias.grad.iter_mut().zip(&d_pre) {
                *g += dp;
            }
            if n == 0 {
                for (w, cnt) in split.left.iter() {
                    self.layers[0].weight.add_to_col_grad_scaled(
                        w as usize,
                        f64::from(cnt),
                        &d_pre,
                    );
                }
            } else {
                let prev = &forward.hiddens[n - 1];
                let mut d_prev = vec![0.0; prev.len()];
                {
                    let layer = &mut self.layers[n];
                    for (r, &dp) in d_pre.iter().enumerate() {
                        for (g, &p) in layer.weight.grad_row_mut(r).iter_mut().zip(prev) {
                            *g += dp * p;
                        }
                        for (dpv, &wv) in d_prev.iter_mut().zip(layer.weight.row(r)) {
                            *dpv += dp * wv;
                        }
                    }
                }
                d_hidden = d_prev;
            }
        }
        Ok(loss)
    }

    /// One training update: draw a split (resampling empty target sides),
    /// backpropagate and step. Returns the pre-update loss.
    pub fn train_step<R: Rng>(
        &mut self,
        counts: &WordCounts,
        rng: &mut R,
        optimizer: &mut Optimizer,
        strategy: SplitStrategy,
    ) -> Result<f64> {
        if counts.is_empty() {
            return Err(Error::EmptyDocument);
        }
        let split = loop {
            let candidate = match strategy {
                SplitStrategy::Histogram => split_histogram(counts, rng)?,
                SplitStrategy::ExactOrdering => sample_ordered_split(counts, rng)?,
            };
            if !candidate.right.is_empty() {
                break candidate;
            }
        };
        self.zero_grads();
        let loss = self.split_backward(&split)?;
        optimizer.step(&mut self.params_mut())?;
        Ok(loss)
    }

    /// `log p(v)` for one explicit ordering. The first-layer pre-activation
    /// is maintained incrementally; deeper layers are recomputed per
    /// position.
    pub fn ordered_doc_logprob(&self, seq: &[u32]) -> Result<f64> {
        if seq.is_empty() {
            return Err(Error::EmptyDocument);
        }
        for &id in seq {
            if id as usize >= self.vocab_size {
                return Err(Error::UnknownWord {
                    id,
                    vocab_size: self.vocab_size,
                });
            }
        }
        let layer1 = &self.layers[0];
        let mut pre1 = layer1.bias.values.clone();
        let mut total = 0.0;
        for &w in seq {
            let mut first = pre1.clone();
            self.activation.apply_in_place(&mut first);
            let forward = self.upper_forward(first);
            total += forward.log_probs[w as usize];
            layer1.weight.add_col_to(w as usize, &mut pre1);
        }
        Ok(total)
    }

    /// Stable log-mean-exp of per-ordering log-probabilities over the
    /// document's ensemble orderings.
    pub fn ensemble_logprob(&self, doc: &Document, spec: &EnsembleSpec) -> Result<f64> {
        let counts = doc.counts();
        let members = self.ensemble_members(&counts, &doc.source_id, spec)?;
        Ok(log_mean_exp(&members))
    }

    /// The individual ordering log-probabilities behind [`ensemble_logprob`].
    ///
    /// [`ensemble_logprob`]: DeepDocNadeModel::ensemble_logprob
    pub fn ensemble_members(
        &self,
        counts: &WordCounts,
        source_id: &str,
        spec: &EnsembleSpec,
    ) -> Result<Vec<f64>> {
        spec.doc_orderings(counts, source_id)?
            .iter()
            .map(|ordering| self.ordered_doc_logprob(ordering))
            .collect()
    }
}

impl Parameterized for DeepDocNadeModel {
    fn params(&self) -> Vec<&ParamTensor> {
        let mut out = Vec::with_capacity(2 * self.layers.len() + 2);
        for layer in &self.layers {
            out.push(&layer.weight);
            out.push(&layer.bias);
        }
        out.push(&self.out_weight);
        out.push(&self.out_bias);
        out
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out = Vec::with_capacity(2 * self.layers.len() + 2);
        for layer in &mut self.layers {
            out.push(&mut layer.weight);
            out.push(&mut layer.bias);
        }
        out.push(&mut self.out_weight);
        out.push(&mut self.out_bias);
        out
    }
}

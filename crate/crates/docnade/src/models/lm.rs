//! Language model whose hidden state sums an unbounded bag-of-words document
//! context with an n-gram term, under a two-level hierarchical softmax.
//!
//! For position `i` the hidden state is
//! `g(b + Σ_{k<i} W_dn[:,v_k] + Σ_{k=1}^{n−1} U_k · W_lm[:,v_{i−k}])`,
//! where positions before the start of the pseudo-document use a reserved
//! padding column of `W_lm`. The output factorizes as
//! `p(w|h) = p(class(w)|h) · p(w|class(w),h)`, each factor a softmax over
//! roughly `sqrt(V)` outcomes, so one conditional costs `O(H·sqrt(V))` on
//! top of the `O(n·H²)` n-gram term.

use crate::nn::{
    dot, init_params, log_softmax_in_place, Activation, InitScheme, Optimizer, ParamTensor,
    Parameterized, Shape,
};
use crate::seeding::rng_for;
use crate::tree::ClassPartition;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct DocNadeLmModel {
    hidden_size: usize,
    ngram: usize,
    activation: Activation,
    use_document_context: bool,
    /// `H×V` document-context embeddings.
    pub dn_embedding: ParamTensor,
    /// `H×(V+1)` n-gram embeddings; column `V` is the begin-of-document pad.
    pub lm_embedding: ParamTensor,
    /// `U_1..U_{n−1}`, each `H×H`, one per n-gram slot.
    pub position_weights: Vec<ParamTensor>,
    /// Hidden bias, length `H`.
    pub hidden_bias: ParamTensor,
    /// `C×H` class-softmax weights and per-class bias.
    pub class_weight: ParamTensor,
    pub class_bias: ParamTensor,
    /// `V×H` word-softmax weights (row `w` is used inside `w`'s class) and
    /// per-word bias.
    pub word_weight: ParamTensor,
    pub word_bias: ParamTensor,
    partition: ClassPartition,
}

impl DocNadeLmModel {
    /// `use_document_context = false` freezes the document-context term at
    /// zero, giving the plain feed-forward n-gram ablation. Both variants
    /// draw identical initial parameters for a given seed.
    pub fn new(
        hidden_size: usize,
        ngram: usize,
        partition: ClassPartition,
        activation: Activation,
        use_document_context: bool,
        seed: u64,
    ) -> Result<Self> {
        if ngram < 2 {
            return Err(Error::Config(format!(
                "n-gram order must be at least 2, got {ngram}"
            )));
        }
        let vocab_size = partition.vocab_size();
        let n_classes = partition.n_classes();
        let mut rng = rng_for(seed, "lm-init", 0);
        let mut dn_embedding = init_params(
            "dn_embedding",
            Shape::Matrix(hidden_size, vocab_size),
            InitScheme::UniformFan,
            &mut rng,
        );
        let lm_embedding = init_params(
            "lm_embedding",
            Shape::Matrix(hidden_size, vocab_size + 1),
            InitScheme::UniformFan,
            &mut rng,
        );
        let position_weights = (1..ngram)
            .map(|k| {
                init_params(
                    format!("ngram_weight_{k}"),
                    Shape::Matrix(hidden_size, hidden_size),
                    InitScheme::UniformFan,
                    &mut rng,
                )
            })
            .collect();
        if !use_document_context {
            dn_embedding.values.fill(0.0);
        }
        Ok(DocNadeLmModel {
            hidden_size,
            ngram,
            activation,
            use_document_context,
            dn_embedding,
            lm_embedding,
            position_weights,
            hidden_bias: ParamTensor::zeros("hidden_bias", Shape::Vector(hidden_size)),
            class_weight: ParamTensor::zeros("class_weight", Shape::Matrix(n_classes, hidden_size)),
            class_bias: ParamTensor::zeros("class_bias", Shape::Vector(n_classes)),
            word_weight: ParamTensor::zeros("word_weight", Shape::Matrix(vocab_size, hidden_size)),
            word_bias: ParamTensor::zeros("word_bias", Shape::Vector(vocab_size)),
            partition,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        ngram: usize,
        partition: ClassPartition,
        activation: Activation,
        use_document_context: bool,
        dn_embedding: ParamTensor,
        lm_embedding: ParamTensor,
        position_weights: Vec<ParamTensor>,
        hidden_bias: ParamTensor,
        class_weight: ParamTensor,
        class_bias: ParamTensor,
        word_weight: ParamTensor,
        word_bias: ParamTensor,
    ) -> Result<Self> {
        if ngram < 2 || position_weights.len() != ngram - 1 {
            return Err(Error::Config(format!(
                "n-gram order {ngram} does not match {} position matrices",
                position_weights.len()
            )));
        }
        let v = partition.vocab_size();
        let h = hidden_bias.len();
        let c = partition.n_classes();
        let checks = [
            (&dn_embedding, Shape::Matrix(h, v)),
            (&lm_embedding, Shape::Matrix(h, v + 1)),
            (&class_weight, Shape::Matrix(c, h)),
            (&class_bias, Shape::Vector(c)),
            (&word_weight, Shape::Matrix(v, h)),
            (&word_bias, Shape::Vector(v)),
        ];
        for (tensor, expected) in checks {
            if tensor.shape != expected {
                return Err(Error::ShapeMismatch {
                    name: tensor.name.clone(),
                    expected: expected.describe(),
                    got: tensor.shape.describe(),
                });
            }
        }
        for u in &position_weights {
            if u.shape != Shape::Matrix(h, h) {
                return Err(Error::ShapeMismatch {
                    name: u.name.clone(),
                    expected: Shape::Matrix(h, h).describe(),
                    got: u.shape.describe(),
                });
            }
        }
        Ok(DocNadeLmModel {
            hidden_size: h,
            ngram,
            activation,
            use_document_context,
            dn_embedding,
            lm_embedding,
            position_weights,
            hidden_bias,
            class_weight,
            class_bias,
            word_weight,
            word_bias,
            partition,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.partition.vocab_size()
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub fn ngram(&self) -> usize {
        self.ngram
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn partition(&self) -> &ClassPartition {
        &self.partition
    }

    pub fn uses_document_context(&self) -> bool {
        self.use_document_context
    }

    /// Reserved `W_lm` column index for out-of-document positions.
    pub fn padding_column(&self) -> usize {
        self.vocab_size()
    }

    fn check_ids(&self, seq: &[u32]) -> Result<()> {
        let v = self.vocab_size();
        for &id in seq {
            if id as usize >= v {
                return Err(Error::UnknownWord { id, vocab_size: v });
            }
        }
        Ok(())
    }

    /// `W_lm` column feeding slot `k` when predicting 1-based `position`.
    fn ngram_source(&self, context: &[u32], position: usize, k: usize) -> usize {
        if position > k {
            context[position - 1 - k] as usize
        } else {
            self.padding_column()
        }
    }

    fn add_ngram_pre(&self, context: &[u32], position: usize, pre: &mut [f64]) {
        for k in 1..self.ngram {
            let source = self.ngram_source(context, position, k);
            let embedded = self.lm_embedding.col_to_vec(source);
            let u = &self.position_weights[k - 1];
            for (r, p) in pre.iter_mut().enumerate() {
                *p += dot(u.row(r), &embedded);
            }
        }
    }

    /// The n-gram contribution to the pre-activation at `position`, before
    /// bias and document context.
    pub fn ngram_term(&self, history: &[u32], position: usize) -> Result<Vec<f64>> {
        self.check_history(history, position)?;
        let mut pre = vec![0.0; self.hidden_size];
        self.add_ngram_pre(history, position, &mut pre);
        Ok(pre)
    }

    fn check_history(&self, history: &[u32], position: usize) -> Result<()> {
        if position == 0 || history.len() != position - 1 {
            return Err(Error::HistoryMismatch {
                history_len: history.len(),
                position,
            });
        }
        self.check_ids(history)
    }

    /// Hidden state for predicting 1-based `position` given the full
    /// preceding words of the pseudo-document.
    pub fn hidden(&self, history: &[u32], position: usize) -> Result<Vec<f64>> {
        self.check_history(history, position)?;
        let mut pre = self.hidden_bias.values.clone();
        if self.use_document_context {
            for &w in history {
                self.dn_embedding.add_col_to(w as usize, &mut pre);
            }
        }
        self.add_ngram_pre(history, position, &mut pre);
        self.activation.apply_in_place(&mut pre);
        Ok(pre)
    }

    fn class_log_probs(&self, hidden: &[f64]) -> Vec<f64> {
        let mut logits = self.class_bias.values.clone();
        for (c, logit) in logits.iter_mut().enumerate() {
            *logit += dot(self.class_weight.row(c), hidden);
        }
        log_softmax_in_place(&mut logits);
        logits
    }

    fn word_log_probs_in_class(&self, hidden: &[f64], class: u32) -> Vec<f64> {
        let members = self.partition.members(class);
        let mut logits: Vec<f64> = members
            .iter()
            .map(|&m| {
                self.word_bias.values[m as usize] + dot(self.word_weight.row(m as usize), hidden)
            })
            .collect();
        log_softmax_in_place(&mut logits);
        logits
    }

    /// `log p(class | h)` of the first softmax level.
    pub fn class_logprob(&self, hidden: &[f64], class: u32) -> f64 {
        self.class_log_probs(hidden)[class as usize]
    }

    /// Two-level log-probability: class softmax times within-class softmax.
    pub fn word_logprob_2level(&self, hidden: &[f64], word: u32) -> Result<f64> {
        if word as usize >= self.vocab_size() {
            return Err(Error::UnknownWord {
                id: word,
                vocab_size: self.vocab_size(),
            });
        }
        let class = self.partition.class_of(word);
        let class_lp = self.class_log_probs(hidden)[class as usize];
        let word_lp =
            self.word_log_probs_in_class(hidden, class)[self.partition.index_in_class(word)];
        Ok(class_lp + word_lp)
    }

    /// `log p(v)` of a pseudo-document. The document-context sum is
    /// maintained incrementally across positions.
    pub fn doc_logprob(&self, seq: &[u32]) -> Result<f64> {
        if seq.is_empty() {
            return Err(Error::EmptyDocument);
        }
        self.check_ids(seq)?;
        let mut dn_sum = vec![0.0; self.hidden_size];
        let mut total = 0.0;
        for i in 1..=seq.len() {
            let mut pre = self.hidden_bias.values.clone();
            if self.use_document_context {
                for (p, &d) in pre.iter_mut().zip(&dn_sum) {
                    *p += d;
                }
            }
            self.add_ngram_pre(seq, i, &mut pre);
            self.activation.apply_in_place(&mut pre);
            total += self.word_logprob_2level(&pre, seq[i - 1])?;
            if self.use_document_context {
                self.dn_embedding
                    .add_col_to(seq[i - 1] as usize, &mut dn_sum);
            }
        }
        Ok(total)
    }

    /// Forward and backward over a whole pseudo-document; gradients
    /// accumulate and the NLL is returned.
    pub fn nll_backward(&mut self, seq: &[u32]) -> Result<f64> {
        if seq.is_empty() {
            return Err(Error::EmptyDocument);
        }
        self.check_ids(seq)?;
        let h_dim = self.hidden_size;

        struct PositionCache {
            hidden: Vec<f64>,
            class_log_probs: Vec<f64>,
            word_log_probs: Vec<f64>,
        }

        let mut nll = 0.0;
        let mut caches = Vec::with_capacity(seq.len());
        let mut dn_sum = vec![0.0; h_dim];
        for i in 1..=seq.len() {
            let word = seq[i - 1];
            let mut pre = self.hidden_bias.values.clone();
            if self.use_document_context {
                for (p, &d) in pre.iter_mut().zip(&dn_sum) {
                    *p += d;
                }
            }
            self.add_ngram_pre(seq, i, &mut pre);
            self.activation.apply_in_place(&mut pre);
            let class = self.partition.class_of(word);
            let class_log_probs = self.class_log_probs(&pre);
            let word_log_probs = self.word_log_probs_in_class(&pre, class);
            nll -= class_log_probs[class as usize]
                + word_log_probs[self.partition.index_in_class(word)];
            caches.push(PositionCache {
                hidden: pre,
                class_log_probs,
                word_log_probs,
            });
            if self.use_document_context {
                self.dn_embedding.add_col_to(word as usize, &mut dn_sum);
            }
        }

        let mut suffix_delta = vec![0.0; h_dim];
        for i in (1..=seq.len()).rev() {
            let word = seq[i - 1];
            let class = self.partition.class_of(word);
            let word_index = self.partition.index_in_class(word);
            let cache = &caches[i - 1];
            let hidden = &cache.hidden;

            // v_i's document-context column feeds every later position.
            if self.use_document_context {
                self.dn_embedding
                    .add_to_col_grad(word as usize, &suffix_delta);
            }

            let mut d_hidden = vec![0.0; h_dim];
            for (c, &lp) in cache.class_log_probs.iter().enumerate() {
                let dz = lp.exp() - f64::from(u8::from(c == class as usize));
                self.class_bias.grad[c] += dz;
                for (g, &h) in self.class_weight.grad_row_mut(c).iter_mut().zip(hidden) {
                    *g += dz * h;
                }
                for (dh, &cw) in d_hidden.iter_mut().zip(self.class_weight.row(c)) {
                    *dh += dz * cw;
                }
            }
            // Only the target word's class block receives word-level
            // gradient.
            let members: Vec<u32> = self.partition.members(class).to_vec();
            for (r, &m) in members.iter().enumerate() {
                let dz = cache.word_log_probs[r].exp() - f64::from(u8::from(r == word_index));
                let m = m as usize;
                self.word_bias.grad[m] += dz;
                for (g, &h) in self.word_weight.grad_row_mut(m).iter_mut().zip(hidden) {
                    *g += dz * h;
                }
                for (dh, &ww) in d_hidden.iter_mut().zip(self.word_weight.row(m)) {
                    *dh += dz * ww;
                }
            }

            let d_pre: Vec<f64> = d_hidden
                .iter()
                .zip(hidden)
                .map(|(&dh, &h)| dh * self.activation.derivative_from_output(h))
                .collect();

            for k in 1..self.ngram {
                let source = self.ngram_source(seq, i, k);
                let embedded = self.lm_embedding.col_to_vec(source);
                let mut d_embedded = vec![0.0; h_dim];
                {
                    let u = &self.position_weights[k - 1];
                    for (r, &dp) in d_pre.iter().enumerate() {
                        for (de, &uv) in d_embedded.iter_mut().zip(u.row(r)) {
                            *de += dp * uv;
                        }
                    }
                }
                let u = &mut self.position_weights[k - 1];
                for (r, &dp) in d_pre.iter().enumerate() {
                    for (g, &e) in u.grad_row_mut(r).iter_mut().zip(&embedded) {
                        *g += dp * e;
                    }
                }
                self.lm_embedding.add_to_col_grad(source, &d_embedded);
            }

            for (s, &dp) in suffix_delta.iter_mut().zip(&d_pre) {
                *s += dp;
            }
        }
        for (g, &s) in self.hidden_bias.grad.iter_mut().zip(&suffix_delta) {
            *g += s;
        }
        Ok(nll)
    }

    /// Zeroes gradients, backpropagates one pseudo-document and applies one
    /// optimizer step. Returns the pre-update NLL.
    pub fn train_step(&mut self, seq: &[u32], optimizer: &mut Optimizer) -> Result<f64> {
        self.zero_grads();
        let nll = self.nll_backward(seq)?;
        optimizer.step(&mut self.params_mut())?;
        Ok(nll)
    }
}

impl Parameterized for DocNadeLmModel {
    fn params(&self) -> Vec<&ParamTensor> {
        let mut out = vec![&self.dn_embedding, &self.lm_embedding];
        out.extend(self.position_weights.iter());
        out.extend([
            &self.hidden_bias,
            &self.class_weight,
            &self.class_bias,
            &self.word_weight,
            &self.word_bias,
        ]);
        out
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out: Vec<&mut ParamTensor> = vec![&mut self.dn_embedding, &mut self.lm_embedding];
        out.extend(self.position_weights.iter_mut());
        out.push(&mut self.hidden_bias);
        out.push(&mut self.class_weight);
        out.push(&mut self.class_bias);
        out.push(&mut self.word_weight);
        out.push(&mut self.word_bias);
        out
    }
}

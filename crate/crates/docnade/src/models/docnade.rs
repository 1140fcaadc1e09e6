//! Single-hidden-layer autoregressive document model with a tree-structured
//! output layer.
//!
//! The hidden state for position `i` is `g(c + Σ_{k<i} W[:,v_k])`, kept as a
//! running pre-activation so all positions cost `O(D·H)`. Each conditional
//! `p(v_i | v_<i)` is a product of per-node Bernoullis along the word's
//! root-to-leaf path, so a document likelihood costs `O(D·H·log V)`.

use crate::corpus::{DocBody, Document, WordCounts};
use crate::nn::{
    dot, init_params, log_mean_exp, log_sigmoid, sigmoid, Activation, InitScheme, Optimizer,
    ParamTensor, Parameterized, Shape,
};
use crate::seeding::rng_for;
use crate::tree::BinaryWordTree;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct DocNadeModel {
    hidden_size: usize,
    activation: Activation,
    /// `H×V`; column `w` is word `w`'s embedding.
    pub embedding: ParamTensor,
    /// Shared hidden bias, length `H`.
    pub hidden_bias: ParamTensor,
    /// `(V−1)×H`; row per internal tree node's logistic unit.
    pub node_weight: ParamTensor,
    /// Per-node bias, length `V−1`.
    pub node_bias: ParamTensor,
    tree: BinaryWordTree,
}

impl DocNadeModel {
    /// Embeddings are fan-scaled uniform; output units and biases start at
    /// zero, which makes every tree decision 0.5.
    pub fn new(
        hidden_size: usize,
        tree: BinaryWordTree,
        activation: Activation,
        seed: u64,
    ) -> Self {
        let v = tree.vocab_size();
        let mut rng = rng_for(seed, "docnade-init", 0);
        DocNadeModel {
            hidden_size,
            activation,
            embedding: init_params(
                "embedding",
                Shape::Matrix(hidden_size, v),
                InitScheme::UniformFan,
                &mut rng,
            ),
            hidden_bias: ParamTensor::zeros("hidden_bias", Shape::Vector(hidden_size)),
            node_weight: ParamTensor::zeros("node_weight", Shape::Matrix(v - 1, hidden_size)),
            node_bias: ParamTensor::zeros("node_bias", Shape::Vector(v - 1)),
            tree,
        }
    }

    /// Reassembles a model from serialized parts, revalidating shapes.
    pub fn from_parts(
        tree: BinaryWordTree,
        activation: Activation,
        embedding: ParamTensor,
        hidden_bias: ParamTensor,
        node_weight: ParamTensor,
        node_bias: ParamTensor,
    ) -> Result<Self> {
        let v = tree.vocab_size();
        let h = hidden_bias.len();
        expect_shape(&embedding, Shape::Matrix(h, v))?;
        expect_shape(&node_weight, Shape::Matrix(v - 1, h))?;
        expect_shape(&node_bias, Shape::Vector(v - 1))?;
        Ok(DocNadeModel {
            hidden_size: h,
            activation,
            embedding,
            hidden_bias,
            node_weight,
            node_bias,
            tree,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.tree.vocab_size()
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn tree(&self) -> &BinaryWordTree {
        &self.tree
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

    fn activate(&self, pre: &[f64]) -> Vec<f64> {
        pre.iter().map(|&x| self.activation.apply(x)).collect()
    }

    /// All hidden states for a sequence: column `i` (1-based, `i = 1..D+1`)
    /// is the state conditioning position `i`; column `D+1` is the document
    /// representation. Computed with one running pre-activation.
    pub fn hidden_states(&self, seq: &[u32]) -> Result<Vec<Vec<f64>>> {
        self.check_ids(seq)?;
        let mut pre = self.hidden_bias.values.clone();
        let mut columns = Vec::with_capacity(seq.len() + 1);
        for &w in seq {
            columns.push(self.activate(&pre));
            self.embedding.add_col_to(w as usize, &mut pre);
        }
        columns.push(self.activate(&pre));
        Ok(columns)
    }

    /// `log p(v_i = w | context)` for the given hidden state: the sum of
    /// Bernoulli log-probabilities along `w`'s tree path.
    pub fn word_logprob(&self, hidden: &[f64], word: u32) -> Result<f64> {
        let (nodes, bits) = self.tree.word_path(word)?;
        let mut lp = 0.0;
        for (&node, &bit) in nodes.iter().zip(bits) {
            let n = node as usize;
            let z = self.node_bias.values[n] + dot(self.node_weight.row(n), hidden);
            lp += if bit { log_sigmoid(z) } else { log_sigmoid(-z) };
        }
        Ok(lp)
    }

    /// `log p(v)` for one ordering, via the probability chain rule.
    pub fn doc_logprob(&self, seq: &[u32]) -> Result<f64> {
        if seq.is_empty() {
            return Err(Error::EmptyDocument);
        }
        self.check_ids(seq)?;
        let mut pre = self.hidden_bias.values.clone();
        let mut total = 0.0;
        for &w in seq {
            let hidden = self.activate(&pre);
            total += self.word_logprob(&hidden, w)?;
            self.embedding.add_col_to(w as usize, &mut pre);
        }
        Ok(total)
    }

    /// Exact bag log-probability: the log of the uniform mean of sequence
    /// probabilities over all distinct permutations of the count multiset.
    /// Factorial enumeration; a test oracle, capped at D ≤ 8.
    pub fn bag_logprob_exact(&self, counts: &WordCounts) -> Result<f64> {
        let d = counts.total();
        if d == 0 {
            return Err(Error::EmptyDocument);
        }
        if d > 8 {
            return Err(Error::EnumerationBound(d));
        }
        if let Some(id) = counts.max_id() {
            if id as usize >= self.vocab_size() {
                return Err(Error::UnknownWord {
                    id,
                    vocab_size: self.vocab_size(),
                });
            }
        }
        let mut remaining: Vec<(u32, u32)> = counts.iter().collect();
        let pre = self.hidden_bias.values.clone();
        let mut ordering_logprobs = Vec::new();
        self.enumerate_orderings(&mut remaining, &pre, 0.0, d, &mut ordering_logprobs)?;
        Ok(log_mean_exp(&ordering_logprobs))
    }

    fn enumerate_orderings(
        &self,
        remaining: &mut Vec<(u32, u32)>,
        pre: &[f64],
        logprob: f64,
        left: usize,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        if left == 0 {
            out.push(logprob);
            return Ok(());
        }
        let hidden = self.activate(pre);
        for idx in 0..remaining.len() {
            let (word, n) = remaining[idx];
            if n == 0 {
                continue;
            }
            let lp = self.word_logprob(&hidden, word)?;
            remaining[idx].1 -= 1;
            let mut next_pre = pre.to_vec();
            self.embedding.add_col_to(word as usize, &mut next_pre);
            self.enumerate_orderings(remaining, &next_pre, logprob + lp, left - 1, out)?;
            remaining[idx].1 += 1;
        }
        Ok(())
    }

    /// Order-independent document feature vector `g(c + Σ W[:,v_k])`.
    pub fn doc_representation(&self, doc: &Document) -> Result<Vec<f64>> {
        doc.validate_ids(self.vocab_size())?;
        let mut pre = self.hidden_bias.values.clone();
        match &doc.body {
            DocBody::Sequence(ids) => {
                for &w in ids {
                    self.embedding.add_col_to(w as usize, &mut pre);
                }
            }
            DocBody::Bag(counts) => {
                for (w, n) in counts.iter() {
                    self.embedding
                        .add_col_scaled_to(w as usize, f64::from(n), &mut pre);
                }
            }
        }
        Ok(self.activate(&pre))
    }

    /// Forward and backward pass for one ordered document; gradients are
    /// accumulated (not zeroed) and the document NLL is returned.
    ///
    /// The tied embedding gradient is collected with one reverse sweep: the
    /// word at position `k` receives the sum of hidden-layer deltas of every
    /// later position, so the backward pass stays `O(D·H)` plus the
    /// `O(D·H·log V)` tree terms.
    pub fn nll_backward(&mut self, seq: &[u32]) -> Result<f64> {
        if seq.is_empty() {
            return Err(Error::EmptyDocument);
        }
        self.check_ids(seq)?;
        let h_dim = self.hidden_size;

        let mut pre = self.hidden_bias.values.clone();
        let mut hiddens: Vec<Vec<f64>> = Vec::with_capacity(seq.len());
        for &w in seq {
            hiddens.push(self.activate(&pre));
            self.embedding.add_col_to(w as usize, &mut pre);
        }

        let mut nll = 0.0;
        let mut suffix_delta = vec![0.0; h_dim];
        for i in (0..seq.len()).rev() {
            let word = seq[i] as usize;
            // Embedding column of v_i feeds every later hidden state.
            self.embedding.add_to_col_grad(word, &suffix_delta);

            let hidden = &hiddens[i];
            let mut d_hidden = vec![0.0; h_dim];
            let (nodes, bits) = self.tree.word_path(seq[i])?;
            for (&node, &bit) in nodes.iter().zip(bits) {
                let n = node as usize;
                let z = self.node_bias.values[n] + dot(self.node_weight.row(n), hidden);
                nll -= if bit { log_sigmoid(z) } else { log_sigmoid(-z) };
                let dz = sigmoid(z) - f64::from(u8::from(bit));
                self.node_bias.grad[n] += dz;
                for (g, &hv) in self.node_weight.grad_row_mut(n).iter_mut().zip(hidden) {
                    *g += dz * hv;
                }
                for (dh, &vw) in d_hidden.iter_mut().zip(self.node_weight.row(n)) {
                    *dh += dz * vw;
                }
            }
            for j in 0..h_dim {
                suffix_delta[j] += d_hidden[j] * self.activation.derivative_from_output(hidden[j]);
            }
        }
        for (g, &s) in self.hidden_bias.grad.iter_mut().zip(&suffix_delta) {
            *g += s;
        }
        Ok(nll)
    }

    /// Zeroes gradients, backpropagates one document and applies one
    /// optimizer step. Returns the pre-update NLL.
    pub fn train_step(&mut self, seq: &[u32], optimizer: &mut Optimizer) -> Result<f64> {
        self.zero_grads();
        let nll = self.nll_backward(seq)?;
        optimizer.step(&mut self.params_mut())?;
        Ok(nll)
    }
}

impl Parameterized for DocNadeModel {
    fn params(&self) -> Vec<&ParamTensor> {
        vec![
            &self.embedding,
            &self.hidden_bias,
            &self.node_weight,
            &self.node_bias,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        vec![
            &mut self.embedding,
            &mut self.hidden_bias,
            &mut self.node_weight,
            &mut self.node_bias,
        ]
    }
}

fn expect_shape(tensor: &ParamTensor, expected: Shape) -> Result<()> {
    if tensor.shape != expected {
        return Err(Error::ShapeMismatch {
            name: tensor.name.clone(),
            expected: expected.describe(),
            got: tensor.shape.describe(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{gradcheck, Sgd};
    use rand::Rng;

    fn randomized(vocab: usize, hidden: usize, seed: u64) -> DocNadeModel {
        let tree = BinaryWordTree::random(vocab, seed).unwrap();
        let mut model = DocNadeModel::new(hidden, tree, Activation::Sigmoid, seed);
        let mut rng = rng_for(seed, "randomize", 1);
        for p in model.params_mut() {
            for v in &mut p.values {
                *v = rng.random_range(-0.8..0.8);
            }
        }
        model
    }

    #[test]
    fn empty_context_hidden_state() {
        let tree = BinaryWordTree::random(4, 0).unwrap();
        let model = DocNadeModel::new(3, tree, Activation::Sigmoid, 0);
        let cols = model.hidden_states(&[]).unwrap();
        assert_eq!(cols.len(), 1);
        assert!(cols[0].iter().all(|&x| x == 0.5)); // c = 0, sigmoid
    }

    #[test]
    fn recursion_matches_direct_evaluation() {
        let model = randomized(12, 6, 3);
        let mut rng = rng_for(4, "doc", 0);
        let seq: Vec<u32> = (0..40).map(|_| rng.random_range(0..12)).collect();
        let cols = model.hidden_states(&seq).unwrap();
        for i in 0..=seq.len() {
            // Direct per-column evaluation of the context sum.
            let mut pre = model.hidden_bias.values.clone();
            for &w in &seq[..i] {
                model.embedding.add_col_to(w as usize, &mut pre);
            }
            for (got, want) in cols[i]
                .iter()
                .zip(pre.iter().map(|&x| model.activation.apply(x)))
            {
                assert!((got - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn hidden_state_ignores_context_order() {
        let model = randomized(10, 5, 5);
        let seq = vec![3, 9, 3, 1, 0, 7];
        let permuted = vec![9, 0, 3, 1, 3, 7];
        let a = model.hidden_states(&seq).unwrap();
        let b = model.hidden_states(&permuted).unwrap();
        let last = seq.len();
        for (x, y) in a[last].iter().zip(&b[last]) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_output_params_give_uniform_tree_decisions() {
        let tree = BinaryWordTree::random(4, 1).unwrap();
        let model = DocNadeModel::new(3, tree, Activation::Sigmoid, 1);
        let h = model.hidden_states(&[]).unwrap().pop().unwrap();
        for w in 0..4 {
            let lp = model.word_logprob(&h, w).unwrap();
            assert!((lp - 0.25f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn two_word_probabilities_sum_to_one() {
        let model = randomized(2, 4, 7);
        let h = model.hidden_states(&[1]).unwrap().pop().unwrap();
        let total =
            model.word_logprob(&h, 0).unwrap().exp() + model.word_logprob(&h, 1).unwrap().exp();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditionals_normalize_over_the_vocabulary() {
        let model = randomized(8, 5, 11);
        let h = model.hidden_states(&[2, 5, 5]).unwrap().pop().unwrap();
        let total: f64 = (0..8)
            .map(|w| model.word_logprob(&h, w).unwrap().exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn doc_logprob_is_the_sum_of_conditionals() {
        let model = randomized(9, 4, 13);
        let seq = vec![1, 8, 3, 3, 0];
        let whole = model.doc_logprob(&seq).unwrap();
        // Factor-by-factor oracle with fresh per-position evaluation.
        let mut sum = 0.0;
        for i in 0..seq.len() {
            let cols = model.hidden_states(&seq[..i]).unwrap();
            sum += model.word_logprob(cols.last().unwrap(), seq[i]).unwrap();
        }
        assert!((whole - sum).abs() < 1e-12);
        assert!(whole.exp() > 0.0 && whole.exp() <= 1.0);
    }

    #[test]
    fn single_word_document() {
        let model = randomized(6, 3, 17);
        let h = model.hidden_states(&[]).unwrap().pop().unwrap();
        let direct = model.word_logprob(&h, 4).unwrap();
        assert_eq!(model.doc_logprob(&[4]).unwrap(), direct);
        assert!(matches!(model.doc_logprob(&[]), Err(Error::EmptyDocument)));
        assert!(model.doc_logprob(&[6]).is_err());
    }

    #[test]
    fn bag_logprob_degenerate_multisets() {
        let model = randomized(5, 3, 19);
        let single = WordCounts::from_pairs([(2, 1)]);
        assert!(
            (model.bag_logprob_exact(&single).unwrap() - model.doc_logprob(&[2]).unwrap()).abs()
                < 1e-12
        );
        let repeated = WordCounts::from_pairs([(2, 2)]);
        assert!(
            (model.bag_logprob_exact(&repeated).unwrap() - model.doc_logprob(&[2, 2]).unwrap())
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn bag_logprob_enumerates_all_permutations() {
        let model = randomized(6, 4, 23);
        let counts = WordCounts::from_pairs([(0, 1), (3, 1), (5, 1)]);
        let perms: [[u32; 3]; 6] = [
            [0, 3, 5],
            [0, 5, 3],
            [3, 0, 5],
            [3, 5, 0],
            [5, 0, 3],
            [5, 3, 0],
        ];
        let logprobs: Vec<f64> = perms
            .iter()
            .map(|perm| model.doc_logprob(perm).unwrap())
            .collect();
        let expected = log_mean_exp(&logprobs);
        assert!((model.bag_logprob_exact(&counts).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn bag_logprob_enumeration_bound() {
        let model = randomized(4, 3, 29);
        let counts = WordCounts::from_pairs([(0, 9)]);
        assert!(matches!(
            model.bag_logprob_exact(&counts),
            Err(Error::EnumerationBound(9))
        ));
    }

    #[test]
    fn representation_matches_last_hidden_column() {
        let model = randomized(10, 6, 31);
        let seq = vec![1, 4, 4, 9, 0];
        let doc = Document::sequence("d", vec![], seq.clone());
        let rep = model.doc_representation(&doc).unwrap();
        let cols = model.hidden_states(&seq).unwrap();
        assert_eq!(&rep, cols.last().unwrap());

        let bag = Document::bag("d", vec![], WordCounts::from_ids(&seq));
        let bag_rep = model.doc_representation(&bag).unwrap();
        for (a, b) in rep.iter().zip(&bag_rep) {
            assert!((a - b).abs() < 1e-12);
        }

        let empty = Document::sequence("e", vec![], vec![]);
        let base = model.doc_representation(&empty).unwrap();
        let expect = model.activate(&model.hidden_bias.values);
        assert_eq!(base, expect);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut model = randomized(6, 4, 37);
        let seq = vec![2, 5, 0];
        model.zero_grads();
        model.nll_backward(&seq).unwrap();
        let report = gradcheck(
            &mut model,
            |m| -m.doc_logprob(&seq).unwrap(),
            1e-5,
            usize::MAX,
            0,
        )
        .unwrap();
        assert!(
            report.max_rel_error < 1e-4,
            "{} at {}[{}]",
            report.max_rel_error,
            report.worst_tensor,
            report.worst_coord
        );
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let mut model = randomized(7, 3, 41);
        let before: Vec<Vec<f64>> = model.params().iter().map(|p| p.values.clone()).collect();
        let mut opt = Optimizer::Sgd(Sgd::new(0.0));
        let nll = model.train_step(&[1, 6, 2], &mut opt).unwrap();
        assert!(nll > 0.0);
        let after: Vec<Vec<f64>> = model.params().iter().map(|p| p.values.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn training_reduces_nll_on_a_tiny_corpus() {
        use crate::corpus::sample_ordering;
        let tree = BinaryWordTree::random(16, 2).unwrap();
        let mut model = DocNadeModel::new(8, tree, Activation::Sigmoid, 2);
        let config = crate::corpus::synthetic::TopicCorpusConfig {
            vocab_size: 16,
            n_topics: 2,
            n_docs: 20,
            doc_len: (4, 8),
            noise: 0.05,
            seed: 5,
        };
        let docs = crate::corpus::synthetic::topic_corpus(&config);
        let mut opt = Optimizer::Sgd(Sgd::new(0.05));
        let mut rng = rng_for(6, "train-orderings", 0);
        let mut first_epoch = 0.0;
        let mut last_epoch = 0.0;
        for epoch in 0..200 {
            let mut total = 0.0;
            for doc in &docs {
                let seq = sample_ordering(&doc.counts(), &mut rng).unwrap();
                total += model.train_step(&seq, &mut opt).unwrap() / seq.len() as f64;
            }
            let mean = total / docs.len() as f64;
            if epoch == 0 {
                first_epoch = mean;
            }
            last_epoch = mean;
        }
        assert!(
            last_epoch < first_epoch,
            "no improvement: {first_epoch} -> {last_epoch}"
        );
    }
}

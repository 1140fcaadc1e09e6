//! Output-layer structures: the probabilistic binary tree over words and the
//! two-level class partition for the hierarchical softmax.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;

use crate::seeding::rng_for;
use crate::{Error, Result};

/// A child of an internal tree node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Child {
    Internal(u32),
    Leaf(u32),
}

/// A full binary tree with one leaf per vocabulary word.
///
/// Internal node ids are assigned in preorder (the root is node 0). For each
/// word the root-to-leaf node sequence and the left/right decision bits are
/// precomputed; bit `m` is true iff the path goes right at the `m`-th node.
#[derive(Clone, Debug)]
pub struct BinaryWordTree {
    nodes: Vec<[Child; 2]>,
    paths: Vec<Vec<u32>>,
    bits: Vec<Vec<bool>>,
    vocab_size: usize,
}

impl BinaryWordTree {
    /// Balanced tree over a seed-shuffled word list, built by recursive
    /// halving. Deterministic for a fixed seed.
    pub fn random(vocab_size: usize, seed: u64) -> Result<Self> {
        if vocab_size < 2 {
            return Err(Error::DegenerateVocabulary(vocab_size));
        }
        let mut words: Vec<u32> = (0..vocab_size as u32).collect();
        words.shuffle(&mut rng_for(seed, "word-tree", 0));
        let mut nodes = Vec::with_capacity(vocab_size - 1);
        build_balanced(&words, &mut nodes);
        Self::from_nodes(nodes, vocab_size)
    }

    /// Huffman tree over word frequencies. Merge-queue ties are broken by the
    /// smaller minimum word id, so the result is a deterministic function of
    /// the frequency vector.
    pub fn huffman(frequencies: &[u64]) -> Result<Self> {
        let vocab_size = frequencies.len();
        if vocab_size < 2 {
            return Err(Error::DegenerateVocabulary(vocab_size));
        }
        if let Some(w) = frequencies.iter().position(|&f| f == 0) {
            return Err(Error::ZeroFrequency(w as u32));
        }

        enum Partial {
            Leaf(u32),
            Node(Box<Partial>, Box<Partial>),
        }

        let mut heap: BinaryHeap<Reverse<(u64, u32, usize)>> = BinaryHeap::new();
        let mut arena: Vec<Partial> = Vec::with_capacity(2 * vocab_size - 1);
        for (w, &f) in frequencies.iter().enumerate() {
            arena.push(Partial::Leaf(w as u32));
            heap.push(Reverse((f, w as u32, w)));
        }
        while heap.len() >= 2 {
            let Reverse((fa, ma, a)) = heap.pop().unwrap();
            let Reverse((fb, mb, b)) = heap.pop().unwrap();
            let left = std::mem::replace(&mut arena[a], Partial::Leaf(0));
            let right = std::mem::replace(&mut arena[b], Partial::Leaf(0));
            arena.push(Partial::Node(Box::new(left), Box::new(right)));
            heap.push(Reverse((fa + fb, ma.min(mb), arena.len() - 1)));
        }
        let Reverse((_, _, root)) = heap.pop().unwrap();

        fn emit(partial: &Partial, nodes: &mut Vec<[Child; 2]>) -> Child {
            match partial {
                Partial::Leaf(w) => Child::Leaf(*w),
                Partial::Node(l, r) => {
                    let idx = nodes.len();
                    nodes.push([Child::Leaf(0), Child::Leaf(0)]);
                    let left = emit(l, nodes);
                    let right = emit(r, nodes);
                    nodes[idx] = [left, right];
                    Child::Internal(idx as u32)
                }
            }
        }

        let mut nodes = Vec::with_capacity(vocab_size - 1);
        emit(&arena[root], &mut nodes);
        Self::from_nodes(nodes, vocab_size)
    }

    /// Validates node structure (fullness, one leaf per word, no sharing) and
    /// precomputes word paths. Node 0 must be the root.
    pub fn from_nodes(nodes: Vec<[Child; 2]>, vocab_size: usize) -> Result<Self> {
        if vocab_size < 2 {
            return Err(Error::DegenerateVocabulary(vocab_size));
        }
        if nodes.len() != vocab_size - 1 {
            return Err(Error::Config(format!(
                "word tree has {} internal nodes for {} leaves",
                nodes.len(),
                vocab_size
            )));
        }
        let mut paths: Vec<Option<Vec<u32>>> = vec![None; vocab_size];
        let mut bits: Vec<Vec<bool>> = vec![Vec::new(); vocab_size];
        let mut visited = vec![false; nodes.len()];
        // Iterative DFS from the root carrying the path so far.
        let mut stack: Vec<(u32, Vec<u32>, Vec<bool>)> = vec![(0, Vec::new(), Vec::new())];
        while let Some((node, path, decisions)) = stack.pop() {
            let idx = node as usize;
            if idx >= nodes.len() || visited[idx] {
                return Err(Error::Config("word tree is not a tree".into()));
            }
            visited[idx] = true;
            for (side, &child) in nodes[idx].iter().enumerate() {
                let mut path = path.clone();
                let mut decisions = decisions.clone();
                path.push(node);
                decisions.push(side == 1);
                match child {
                    Child::Internal(c) => stack.push((c, path, decisions)),
                    Child::Leaf(w) => {
                        let w = w as usize;
                        if w >= vocab_size {
                            return Err(Error::UnknownWord {
                                id: w as u32,
                                vocab_size,
                            });
                        }
                        if paths[w].is_some() {
                            return Err(Error::Config(format!(
                                "word {w} appears at more than one leaf"
                            )));
                        }
                        paths[w] = Some(path);
                        bits[w] = decisions;
                    }
                }
            }
        }
        if let Some(w) = paths.iter().position(|p| p.is_none()) {
            return Err(Error::Config(format!("word {w} has no leaf")));
        }
        Ok(BinaryWordTree {
            nodes,
            paths: paths.into_iter().map(Option::unwrap).collect(),
            bits,
            vocab_size,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[Child; 2]] {
        &self.nodes
    }

    /// Root-to-leaf node ids and decision bits for `word`.
    pub fn word_path(&self, word: u32) -> Result<(&[u32], &[bool])> {
        let w = word as usize;
        if w >= self.vocab_size {
            return Err(Error::UnknownWord {
                id: word,
                vocab_size: self.vocab_size,
            });
        }
        Ok((&self.paths[w], &self.bits[w]))
    }

    pub fn depth(&self, word: u32) -> Result<usize> {
        Ok(self.word_path(word)?.0.len())
    }

    pub fn max_depth(&self) -> usize {
        self.paths.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Mean path length weighted by word frequency.
    pub fn weighted_mean_depth(&self, frequencies: &[u64]) -> f64 {
        let total: u64 = frequencies.iter().sum();
        let weighted: f64 = frequencies
            .iter()
            .enumerate()
            .map(|(w, &f)| f as f64 * self.paths[w].len() as f64)
            .sum();
        weighted / total as f64
    }
}

fn build_balanced(words: &[u32], nodes: &mut Vec<[Child; 2]>) -> Child {
    if words.len() == 1 {
        return Child::Leaf(words[0]);
    }
    let mid = words.len().div_ceil(2);
    let idx = nodes.len();
    nodes.push([Child::Leaf(0), Child::Leaf(0)]);
    let left = build_balanced(&words[..mid], nodes);
    let right = build_balanced(&words[mid..], nodes);
    nodes[idx] = [left, right];
    Child::Internal(idx as u32)
}

/// Two-level output partition: every word belongs to exactly one of
/// `≈ sqrt(V)` classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassPartition {
    class_of: Vec<u32>,
    index_in_class: Vec<u32>,
    members: Vec<Vec<u32>>,
}

impl ClassPartition {
    /// Contiguous id blocks; class sizes differ by at most one.
    pub fn build(vocab_size: usize) -> Result<Self> {
        if vocab_size < 2 {
            return Err(Error::DegenerateVocabulary(vocab_size));
        }
        let n_classes = {
            let c = vocab_size.isqrt();
            if c * c < vocab_size {
                c + 1
            } else {
                c
            }
        };
        let base = vocab_size / n_classes;
        let remainder = vocab_size % n_classes;
        let mut class_of = Vec::with_capacity(vocab_size);
        for class in 0..n_classes {
            let size = base + usize::from(class < remainder);
            class_of.extend(std::iter::repeat_n(class as u32, size));
        }
        Self::from_class_of(class_of)
    }

    /// Rebuilds a partition from a word→class table, validating coverage.
    pub fn from_class_of(class_of: Vec<u32>) -> Result<Self> {
        let vocab_size = class_of.len();
        if vocab_size < 2 {
            return Err(Error::DegenerateVocabulary(vocab_size));
        }
        let n_classes = class_of.iter().max().map_or(0, |&c| c as usize + 1);
        let mut members: Vec<Vec<u32>> = vec![Vec::new(); n_classes];
        let mut index_in_class = vec![0u32; vocab_size];
        for (w, &c) in class_of.iter().enumerate() {
            index_in_class[w] = members[c as usize].len() as u32;
            members[c as usize].push(w as u32);
        }
        if let Some(c) = members.iter().position(Vec::is_empty) {
            return Err(Error::Config(format!("class {c} has no members")));
        }
        Ok(ClassPartition {
            class_of,
            index_in_class,
            members,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.class_of.len()
    }

    pub fn n_classes(&self) -> usize {
        self.members.len()
    }

    pub fn class_of(&self, word: u32) -> u32 {
        self.class_of[word as usize]
    }

    /// Position of `word` inside its class's member list.
    pub fn index_in_class(&self, word: u32) -> usize {
        self.index_in_class[word as usize] as usize
    }

    pub fn members(&self, class: u32) -> &[u32] {
        &self.members[class as usize]
    }

    pub fn class_table(&self) -> &[u32] {
        &self.class_of
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smallest_tree() {
        let tree = BinaryWordTree::random(2, 0).unwrap();
        assert_eq!(tree.internal_count(), 1);
        for w in 0..2 {
            let (nodes, bits) = tree.word_path(w).unwrap();
            assert_eq!(nodes, &[0]);
            assert_eq!(bits.len(), 1);
        }
        let (_, b0) = tree.word_path(0).unwrap();
        let (_, b1) = tree.word_path(1).unwrap();
        assert_ne!(b0[0], b1[0]);
    }

    #[test]
    fn four_leaves_are_perfectly_balanced() {
        let tree = BinaryWordTree::random(4, 3).unwrap();
        assert_eq!(tree.internal_count(), 3);
        let mut strings: Vec<Vec<bool>> = (0..4)
            .map(|w| tree.word_path(w).unwrap().1.to_vec())
            .collect();
        for s in &strings {
            assert_eq!(s.len(), 2);
        }
        strings.sort();
        strings.dedup();
        assert_eq!(strings.len(), 4, "bit strings must be {{00,01,10,11}}");
    }

    #[test]
    fn five_leaves_have_depths_two_and_three() {
        let tree = BinaryWordTree::random(5, 1).unwrap();
        let depths: Vec<usize> = (0..5).map(|w| tree.depth(w).unwrap()).collect();
        assert!(depths.iter().all(|&d| d == 2 || d == 3));
        assert_eq!(tree.max_depth(), 3); // ceil(log2 5)
    }

    #[test]
    fn degenerate_vocabulary_rejected() {
        assert!(BinaryWordTree::random(1, 0).is_err());
        assert!(BinaryWordTree::random(0, 0).is_err());
    }

    #[test]
    fn random_tree_is_deterministic_per_seed() {
        let a = BinaryWordTree::random(13, 42).unwrap();
        let b = BinaryWordTree::random(13, 42).unwrap();
        let c = BinaryWordTree::random(13, 43).unwrap();
        assert_eq!(a.nodes(), b.nodes());
        assert_ne!(a.nodes(), c.nodes());
    }

    #[test]
    fn paths_reach_the_right_leaf() {
        let tree = BinaryWordTree::random(11, 5).unwrap();
        for w in 0..11u32 {
            let (nodes, bits) = tree.word_path(w).unwrap();
            assert_eq!(nodes[0], 0, "root first");
            let mut cursor = Child::Internal(0);
            for (&n, &b) in nodes.iter().zip(bits) {
                match cursor {
                    Child::Internal(idx) => {
                        assert_eq!(idx, n);
                        cursor = tree.nodes()[idx as usize][usize::from(b)];
                    }
                    Child::Leaf(_) => panic!("path continues past leaf"),
                }
            }
            assert_eq!(cursor, Child::Leaf(w));
        }
    }

    #[test]
    fn unknown_word_is_an_error() {
        let tree = BinaryWordTree::random(4, 0).unwrap();
        assert!(tree.word_path(4).is_err());
    }

    #[test]
    fn huffman_two_words_forced() {
        let tree = BinaryWordTree::huffman(&[1, 1]).unwrap();
        assert_eq!(tree.internal_count(), 1);
        assert_eq!(tree.depth(0).unwrap(), 1);
        assert_eq!(tree.depth(1).unwrap(), 1);
    }

    #[test]
    fn huffman_hand_run() {
        // Merge 1,1 -> 2; then 2,2 -> 4; then 4,4 -> 8.
        let tree = BinaryWordTree::huffman(&[4, 2, 1, 1]).unwrap();
        let depths: Vec<usize> = (0..4).map(|w| tree.depth(w).unwrap()).collect();
        assert_eq!(depths, vec![1, 2, 3, 3]);
    }

    #[test]
    fn huffman_rejects_zero_frequency() {
        assert!(matches!(
            BinaryWordTree::huffman(&[3, 0, 1]),
            Err(Error::ZeroFrequency(1))
        ));
    }

    #[test]
    fn huffman_never_beats_itself_with_random_tree() {
        // Huffman codes minimize expected code length among prefix codes.
        let mut rng = crate::seeding::rng_for(77, "huffman-vs-random", 0);
        use rand::Rng;
        for round in 0..100 {
            let v = rng.random_range(2..40usize);
            let freqs: Vec<u64> = (0..v).map(|_| rng.random_range(1..1000u64)).collect();
            let huffman = BinaryWordTree::huffman(&freqs).unwrap();
            let random = BinaryWordTree::random(v, round).unwrap();
            assert!(
                huffman.weighted_mean_depth(&freqs) <= random.weighted_mean_depth(&freqs) + 1e-12,
                "round {round}: huffman deeper than balanced"
            );
        }
    }

    proptest! {
        /// Bit strings of a full binary tree are prefix-free and complete:
        /// Kraft sum exactly 1. Balanced halving keeps the longest path at
        /// ceil(log2 V).
        #[test]
        fn kraft_sum_is_one(v in 2usize..64, seed in 0u64..32) {
            let tree = BinaryWordTree::random(v, seed).unwrap();
            let sum: f64 = (0..v as u32)
                .map(|w| 0.5f64.powi(tree.depth(w).unwrap() as i32))
                .sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert_eq!(tree.max_depth(), (v as f64).log2().ceil() as usize);
        }

        #[test]
        fn kraft_sum_is_one_for_huffman(freqs in prop::collection::vec(1u64..100, 2..32)) {
            let tree = BinaryWordTree::huffman(&freqs).unwrap();
            let sum: f64 = (0..freqs.len() as u32)
                .map(|w| 0.5f64.powi(tree.depth(w).unwrap() as i32))
                .sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_exact_square() {
        let p = ClassPartition::build(4).unwrap();
        assert_eq!(p.n_classes(), 2);
        assert_eq!(p.members(0), &[0, 1]);
        assert_eq!(p.members(1), &[2, 3]);
    }

    #[test]
    fn partition_ceil_arithmetic() {
        let p = ClassPartition::build(5).unwrap();
        assert_eq!(p.n_classes(), 3);
        let sizes: Vec<usize> = (0..3).map(|c| p.members(c).len()).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
    }

    #[test]
    fn partition_matches_large_vocabulary_arithmetic() {
        let p = ClassPartition::build(17964).unwrap();
        assert_eq!(p.n_classes(), 135);
        let sizes: Vec<usize> = (0..135).map(|c| p.members(c as u32).len()).collect();
        let min = *sizes.iter().min().unwrap();
        let max = *sizes.iter().max().unwrap();
        assert!(max - min <= 1);
        assert_eq!(sizes.iter().sum::<usize>(), 17964);
    }

    proptest! {
        #[test]
        fn partition_covers_every_word_once(v in 2usize..500) {
            let p = ClassPartition::build(v).unwrap();
            let mut seen = vec![false; v];
            for c in 0..p.n_classes() as u32 {
                for &w in p.members(c) {
                    prop_assert!(!seen[w as usize]);
                    seen[w as usize] = true;
                    prop_assert_eq!(p.class_of(w), c);
                    prop_assert_eq!(p.members(c)[p.index_in_class(w)], w);
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
        }
    }
}

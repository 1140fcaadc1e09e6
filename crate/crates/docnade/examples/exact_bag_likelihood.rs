//! The bag-of-words likelihood is a uniform average over word orderings.
//! This example compares three routes to the same quantity on a small
//! document: exact enumeration over all distinct permutations, Monte-Carlo
//! ordering sampling, and the log-mean-exp ensemble used at scale.
//!
//! ```bash
//! cargo run --release --example exact_bag_likelihood
//! ```

use docnade::corpus::{sample_ordering, Document, WordCounts};
use docnade::nn::{Activation, Parameterized};
use docnade::seeding::rng_for;
use docnade::tree::BinaryWordTree;
use docnade::{DocNadeModel, EnsembleSpec};

use rand::Rng;

fn main() -> docnade::Result<()> {
    let tree = BinaryWordTree::random(12, 60)?;
    let mut model = DocNadeModel::new(6, tree, Activation::Sigmoid, 60);
    let mut rng = rng_for(61, "bag-example", 0);
    for p in model.params_mut() {
        for v in &mut p.values {
            *v = rng.random_range(-0.8..0.8);
        }
    }

    // Four words, one repeated: 4!/2! = 12 distinct orderings.
    let counts = WordCounts::from_pairs([(2, 2), (7, 1), (11, 1)]);
    let exact = model.bag_logprob_exact(&counts)?;
    println!("exact log p(bag) over every ordering: {exact:.6}");

    let n = 200_000;
    let mut sum = 0.0;
    for _ in 0..n {
        let ordering = sample_ordering(&counts, &mut rng)?;
        sum += model.doc_logprob(&ordering)?.exp();
    }
    println!(
        "monte-carlo over {n} sampled orderings: {:.6}",
        (sum / n as f64).ln()
    );

    let doc = Document::bag("demo", vec![], counts);
    for m in [1usize, 16, 256] {
        let spec = EnsembleSpec::new(m, 62);
        let members: Vec<f64> = spec
            .doc_orderings(&doc.counts(), &doc.source_id)?
            .iter()
            .map(|o| model.doc_logprob(o).unwrap())
            .collect();
        println!(
            "ensemble estimate with M = {m:3}: {:.6}",
            docnade::nn::log_mean_exp(&members)
        );
    }
    Ok(())
}

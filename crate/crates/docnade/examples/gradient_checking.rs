//! Validate every hand-derived backward pass against central finite
//! differences of the corresponding loss.
//!
//! ```bash
//! cargo run --example gradient_checking
//! ```

use docnade::corpus::{SplitContext, WordCounts};
use docnade::nn::{gradcheck, Activation, Parameterized};
use docnade::seeding::rng_for;
use docnade::tree::{BinaryWordTree, ClassPartition};
use docnade::{DeepDocNadeModel, DocNadeLmModel, DocNadeModel};

use rand::Rng;

fn randomize<M: Parameterized>(model: &mut M, seed: u64) {
    let mut rng = rng_for(seed, "example-gradcheck", 0);
    for p in model.params_mut() {
        for v in &mut p.values {
            *v = rng.random_range(-0.7..0.7);
        }
    }
}

fn main() -> docnade::Result<()> {
    // DocNADE: document NLL through the tree output and tied embeddings.
    let tree = BinaryWordTree::random(8, 1)?;
    let mut docnade = DocNadeModel::new(5, tree, Activation::Sigmoid, 1);
    randomize(&mut docnade, 2);
    let seq = vec![2u32, 7, 0, 2];
    docnade.zero_grads();
    docnade.nll_backward(&seq)?;
    let report = gradcheck(
        &mut docnade,
        |m| -m.doc_logprob(&seq).unwrap(),
        1e-5,
        usize::MAX,
        0,
    )?;
    println!(
        "docnade      : {} coordinates, max rel error {:.2e}",
        report.coords_checked, report.max_rel_error
    );

    // DeepDocNADE: rescaled split loss through three layers and the softmax.
    let mut deep = DeepDocNadeModel::new(8, &[5, 4, 3], Activation::Tanh, 3)?;
    randomize(&mut deep, 4);
    let split = SplitContext {
        left: WordCounts::from_pairs([(1, 2), (6, 1)]),
        right: WordCounts::from_pairs([(0, 1), (3, 2)]),
        split_pos: 4,
        total: 6,
    };
    deep.zero_grads();
    deep.split_backward(&split)?;
    let report = gradcheck(
        &mut deep,
        |m| m.split_loss(&split).unwrap(),
        1e-5,
        usize::MAX,
        0,
    )?;
    println!(
        "deep (3-layer): {} coordinates, max rel error {:.2e}",
        report.coords_checked, report.max_rel_error
    );

    // Language model: NLL through both embedding tables, the position
    // matrices (including the padding column) and the two-level softmax.
    let partition = ClassPartition::build(8)?;
    let mut lm = DocNadeLmModel::new(5, 3, partition, Activation::Sigmoid, true, 5)?;
    randomize(&mut lm, 6);
    let doc = vec![1u32, 7, 3, 3];
    lm.zero_grads();
    lm.nll_backward(&doc)?;
    let report = gradcheck(
        &mut lm,
        |m| -m.doc_logprob(&doc).unwrap(),
        1e-5,
        usize::MAX,
        0,
    )?;
    println!(
        "language model: {} coordinates, max rel error {:.2e}",
        report.coords_checked, report.max_rel_error
    );
    Ok(())
}

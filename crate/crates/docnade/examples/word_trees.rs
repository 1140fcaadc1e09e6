//! Output-layer structures: balanced random word trees vs Huffman trees,
//! and the two-level class partition used by the hierarchical softmax.
//!
//! ```bash
//! cargo run --example word_trees
//! ```

use docnade::tree::{BinaryWordTree, ClassPartition};

fn main() -> docnade::Result<()> {
    // A Zipf-like frequency profile.
    let vocab_size = 1000usize;
    let frequencies: Vec<u64> = (0..vocab_size)
        .map(|rank| (100_000.0 / (rank + 1) as f64).ceil() as u64)
        .collect();

    let random = BinaryWordTree::random(vocab_size, 7)?;
    let huffman = BinaryWordTree::huffman(&frequencies)?;

    println!("V = {vocab_size} words");
    println!(
        "balanced random tree: max depth {}, frequency-weighted mean depth {:.3}",
        random.max_depth(),
        random.weighted_mean_depth(&frequencies)
    );
    println!(
        "huffman tree:         max depth {}, frequency-weighted mean depth {:.3}",
        huffman.max_depth(),
        huffman.weighted_mean_depth(&frequencies)
    );

    // Both are full binary trees: their codes satisfy Kraft equality.
    for (name, tree) in [("random", &random), ("huffman", &huffman)] {
        let kraft: f64 = (0..vocab_size as u32)
            .map(|w| 0.5f64.powi(tree.depth(w).unwrap() as i32))
            .sum();
        println!("kraft sum ({name}) = {kraft:.12}");
    }

    let (nodes, bits) = huffman.word_path(0)?;
    let code: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
    println!(
        "most frequent word: path length {}, code {code}",
        nodes.len()
    );

    let partition = ClassPartition::build(vocab_size)?;
    let sizes: Vec<usize> = (0..partition.n_classes() as u32)
        .map(|c| partition.members(c).len())
        .collect();
    println!(
        "\ntwo-level partition: {} classes, sizes {}..{}",
        partition.n_classes(),
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    );
    Ok(())
}

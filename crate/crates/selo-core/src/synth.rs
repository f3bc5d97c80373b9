//! Seeded synthetic signed graphs for tests, benchmarks and the
//! dataset-free parts of the acceptance suite.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{SignedDigraph, SignedEdge};

/// Random signed digraph with independently drawn edges; each edge is
/// negative with probability `neg_fraction`.
pub fn random_signed_digraph(
    num_nodes: usize,
    num_edges: usize,
    neg_fraction: f64,
    seed: u64,
) -> SignedDigraph {
    assert!(num_nodes >= 2, "need at least two nodes");
    let capacity = num_nodes * (num_nodes - 1);
    let num_edges = num_edges.min(capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(num_edges);
    let mut edges = Vec::with_capacity(num_edges);
    while edges.len() < num_edges {
        let src = rng.gen_range(0..num_nodes);
        let dst = rng.gen_range(0..num_nodes);
        if src == dst || !seen.insert((src, dst)) {
            continue;
        }
        let sign = if rng.gen_bool(neg_fraction) { -1 } else { 1 };
        edges.push(SignedEdge { src, dst, sign });
    }
    SignedDigraph::from_edges(num_nodes, edges).expect("generator respects graph invariants")
}

/// Two-block graph with planted sign structure: edges inside a block are
/// positive, edges across blocks negative, each flipped with probability
/// `flip_prob`. A fraction `intra_prob` of edges is drawn inside a block,
/// which also controls the positive/negative imbalance. Edge signs are
/// predictable from the surrounding topology, which makes the graph a
/// useful end-to-end sanity target.
pub fn planted_two_block(
    nodes_per_block: usize,
    num_edges: usize,
    intra_prob: f64,
    flip_prob: f64,
    seed: u64,
) -> SignedDigraph {
    assert!(nodes_per_block >= 2, "need at least two nodes per block");
    let n = 2 * nodes_per_block;
    let capacity = n * (n - 1);
    let num_edges = num_edges.min(capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(num_edges);
    let mut edges = Vec::with_capacity(num_edges);
    while edges.len() < num_edges {
        let (src, dst) = if rng.gen_bool(intra_prob) {
            let block = rng.gen_range(0..2) * nodes_per_block;
            (
                block + rng.gen_range(0..nodes_per_block),
                block + rng.gen_range(0..nodes_per_block),
            )
        } else {
            let src_block = rng.gen_range(0..2);
            (
                src_block * nodes_per_block + rng.gen_range(0..nodes_per_block),
                (1 - src_block) * nodes_per_block + rng.gen_range(0..nodes_per_block),
            )
        };
        if src == dst || !seen.insert((src, dst)) {
            continue;
        }
        let same_block = (src < nodes_per_block) == (dst < nodes_per_block);
        let mut sign: i8 = if same_block { 1 } else { -1 };
        if rng.gen_bool(flip_prob) {
            sign = -sign;
        }
        edges.push(SignedEdge { src, dst, sign });
    }
    SignedDigraph::from_edges(n, edges).expect("generator respects graph invariants")
}

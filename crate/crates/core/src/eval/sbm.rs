use rand::Rng;

use crate::error::{MileError, Result};
use crate::graph::{Edge, Graph};
use crate::rng;

use super::LabelSet;

/// Stochastic block model with `blocks` contiguous blocks of `per_block`
/// nodes. Each unordered pair is an edge with probability `p_in` inside a
/// block and `p_out` across blocks. Node `u` is labeled `u / per_block`.
pub fn sbm_generate(
    blocks: usize,
    per_block: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(Graph, LabelSet)> {
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(MileError::Config(format!("probability {p} outside [0, 1]")));
        }
    }
    let n = blocks * per_block;
    let mut r = rng::seeded(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if u / per_block == v / per_block {
                p_in
            } else {
                p_out
            };
            if r.random_bool(p) {
                edges.push(Edge::unit(u, v));
            }
        }
    }
    let g = Graph::from_edge_list(&edges, Some(n))?;
    let labels: Vec<usize> = (0..n).map(|u| u / per_block).collect();
    Ok((g, LabelSet::single(blocks, &labels)?))
}

//! Normalized heavy edge matching, plus the random matcher used as an
//! ablation baseline.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::error::{MileError, Result};
use crate::graph::Graph;

/// Degree-normalized edge weight `A(u,v) / sqrt(D(u,u) D(v,v))`.
pub fn normalized_weight(g: &Graph, u: usize, v: usize) -> Result<f64> {
    let w = g.weight(u, v).ok_or(MileError::AbsentEdge { u, v })?;
    let d = g.degrees();
    Ok(w / (d[u] * d[v]).sqrt())
}

/// Greedy heavy edge matching over the nodes not already matched.
///
/// Nodes are visited by ascending neighbor count (ties by id). Each visited
/// unmatched node pairs with the unmatched neighbor of largest normalized
/// weight, lowest id on ties. Returns `(visited, chosen)` pairs.
pub fn nhem_pairs(g: &Graph, already_matched: &[bool]) -> Vec<(usize, usize)> {
    let n = g.node_count();
    debug_assert_eq!(already_matched.len(), n);
    let mut matched = already_matched.to_vec();
    let deg = g.degrees();

    let mut order: Vec<(usize, usize)> = (0..n)
        .filter(|&u| !matched[u])
        .map(|u| (g.neighbors(u).count(), u))
        .collect();
    order.sort_unstable();

    let mut pairs = Vec::new();
    for (_, v) in order {
        if matched[v] {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (u, w) in g.row(v) {
            if u == v || matched[u] {
                continue;
            }
            let score = w / (deg[u] * deg[v]).sqrt();
            // row ids ascend, so strict > keeps the lowest id on ties
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((u, score));
            }
        }
        if let Some((u, _)) = best {
            matched[u] = true;
            matched[v] = true;
            pairs.push((v, u));
        }
    }
    pairs
}

/// Random maximal matching over edges: nodes are visited in a shuffled order
/// and each unmatched node joins a uniformly chosen unmatched neighbor.
pub fn random_pairs<R: Rng>(g: &Graph, rng: &mut R) -> Vec<(usize, usize)> {
    let n = g.node_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut matched = vec![false; n];
    let mut pairs = Vec::new();
    let mut candidates = Vec::new();
    for v in order {
        if matched[v] {
            continue;
        }
        candidates.clear();
        candidates.extend(g.neighbors(v).filter(|&u| !matched[u]));
        if let Some(&u) = candidates.choose(rng) {
            matched[u] = true;
            matched[v] = true;
            pairs.push((v, u));
        }
    }
    pairs
}

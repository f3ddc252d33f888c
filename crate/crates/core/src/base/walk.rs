//! Truncated weighted random walks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::Graph;
use crate::rng;

/// Weighted transition sampler over a graph's CSR rows.
pub struct RandomWalker<'g> {
    graph: &'g Graph,
    // inclusive prefix sums of each row's weights, aligned with the CSR arrays
    cumulative: Vec<f64>,
}

impl<'g> RandomWalker<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        let mut cumulative = Vec::with_capacity(graph.edge_weights().len());
        for u in 0..graph.node_count() {
            let mut acc = 0.0;
            for &w in graph.row_weights(u) {
                acc += w;
                cumulative.push(acc);
            }
        }
        RandomWalker { graph, cumulative }
    }

    /// Samples the next node with probability proportional to edge weight
    /// (self-loops included). `None` if `u` has no incident edges.
    pub fn step<R: Rng>(&self, u: usize, rng: &mut R) -> Option<usize> {
        let offsets = self.graph.row_offsets();
        let row = &self.cumulative[offsets[u]..offsets[u + 1]];
        let total = *row.last()?;
        let r = rng.random::<f64>() * total;
        let k = row.partition_point(|&c| c <= r).min(row.len() - 1);
        Some(self.graph.row_ids(u)[k])
    }

    /// A walk of at most `length` nodes starting at `start`.
    pub fn walk<R: Rng>(&self, start: usize, length: usize, rng: &mut R) -> Vec<usize> {
        let mut path = Vec::with_capacity(length);
        if length == 0 {
            return path;
        }
        path.push(start);
        let mut cur = start;
        while path.len() < length {
            match self.step(cur, rng) {
                Some(next) => {
                    path.push(next);
                    cur = next;
                }
                None => break,
            }
        }
        path
    }
}

/// `walks_per_node` passes; each pass starts one walk from every node in a
/// freshly shuffled order.
pub fn generate_walks<R: Rng>(
    g: &Graph,
    walks_per_node: usize,
    walk_length: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let walker = RandomWalker::new(g);
    let mut order: Vec<usize> = (0..g.node_count()).collect();
    let mut walks = Vec::with_capacity(walks_per_node * g.node_count());
    for _ in 0..walks_per_node {
        order.shuffle(rng);
        for &start in &order {
            walks.push(walker.walk(start, walk_length, rng));
        }
    }
    walks
}

/// Sharded variant: start nodes are split across `threads` workers, each
/// with its own stream derived from `seed`. Output is reproducible for a
/// fixed thread count but differs from [`generate_walks`].
pub fn generate_walks_parallel(
    g: &Graph,
    walks_per_node: usize,
    walk_length: usize,
    seed: u64,
    threads: usize,
) -> Vec<Vec<usize>> {
    let threads = threads.max(1);
    let n = g.node_count();
    let walker = RandomWalker::new(g);
    let chunk = n.div_ceil(threads).max(1);
    let shards: Vec<Vec<Vec<usize>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let walker = &walker;
                s.spawn(move || {
                    let mut r = rng::seeded(rng::mix64(seed ^ (t as u64 + 1)));
                    let mut starts: Vec<usize> = (t * chunk..((t + 1) * chunk).min(n)).collect();
                    let mut out = Vec::with_capacity(walks_per_node * starts.len());
                    for _ in 0..walks_per_node {
                        starts.shuffle(&mut r);
                        for &u in &starts {
                            out.push(walker.walk(u, walk_length, &mut r));
                        }
                    }
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("walk worker panicked"))
            .collect()
    });
    shards.into_iter().flatten().collect()
}

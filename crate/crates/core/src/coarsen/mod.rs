//! Graph coarsening: hybrid structural-equivalence + normalized heavy edge
//! matching, followed by the `Mᵀ A M` collapse.

mod hem;
mod matching;
mod sem;

use std::fmt;

pub use hem::{nhem_pairs, normalized_weight, random_pairs};
pub use matching::{
    build_matching_matrix, coarse_adjacency, read_assignment, write_assignment, MatchingMatrix,
};
pub use sem::sem_groups;

use crate::graph::Graph;
use crate::rng;

/// Default lower bound on the coarsest graph size.
pub const DEFAULT_MIN_NODES: usize = 128;

/// Strategy used to pick matchings at each level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Matcher {
    /// Structural equivalence first, then normalized heavy edge matching.
    #[default]
    Hybrid,
    /// Seeded random maximal matching over edges.
    Random { seed: u64 },
}

/// One coarsening level with the hybrid matcher.
pub fn coarsen_step(g: &Graph) -> (MatchingMatrix, Graph) {
    coarsen_step_with(g, Matcher::Hybrid, 0)
}

/// One coarsening level. `level` only perturbs the random matcher's stream.
pub fn coarsen_step_with(g: &Graph, matcher: Matcher, level: usize) -> (MatchingMatrix, Graph) {
    let n = g.node_count();
    let (groups, pairs) = match matcher {
        Matcher::Hybrid => {
            let groups = sem_groups(g);
            let mut matched = vec![false; n];
            for &u in groups.iter().flatten() {
                matched[u] = true;
            }
            let pairs = nhem_pairs(g, &matched);
            (groups, pairs)
        }
        Matcher::Random { seed } => {
            let mut r = rng::seeded(rng::mix64(seed ^ level as u64));
            (Vec::new(), random_pairs(g, &mut r))
        }
    };
    let m = build_matching_matrix(n, &groups, &pairs)
        .expect("matchers emit disjoint, in-range node sets");
    let coarse = coarse_adjacency(g, &m).expect("matching built for this graph");
    (m, coarse)
}

/// Graphs `G_0..G_m` and the matchings between consecutive levels.
#[derive(Clone, Debug)]
pub struct CoarseningChain {
    graphs: Vec<Graph>,
    matchings: Vec<MatchingMatrix>,
    requested: usize,
}

impl CoarseningChain {
    /// Chain with only the input graph.
    pub fn trivial(g: Graph) -> Self {
        CoarseningChain {
            graphs: vec![g],
            matchings: Vec::new(),
            requested: 0,
        }
    }

    /// Number of coarsening steps actually performed.
    pub fn levels(&self) -> usize {
        self.matchings.len()
    }

    pub fn requested_levels(&self) -> usize {
        self.requested
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn matchings(&self) -> &[MatchingMatrix] {
        &self.matchings
    }

    pub fn graph(&self, level: usize) -> &Graph {
        &self.graphs[level]
    }

    pub fn coarsest(&self) -> &Graph {
        self.graphs.last().expect("chain holds at least G_0")
    }

    /// Composed assignment from level-0 nodes to coarsest super-nodes.
    pub fn flat_assignment(&self) -> Vec<usize> {
        let mut a: Vec<usize> = (0..self.graphs[0].node_count()).collect();
        for m in &self.matchings {
            for c in a.iter_mut() {
                *c = m.coarse_of(*c);
            }
        }
        a
    }
}

/// Line-oriented dump: per level, node/edge counts and the assignment into
/// the next level.
impl fmt::Display for CoarseningChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "levels {} requested {}",
            self.levels(),
            self.requested_levels()
        )?;
        for (i, g) in self.graphs.iter().enumerate() {
            writeln!(
                f,
                "level {i} nodes {} edges {}",
                g.node_count(),
                g.edge_count()
            )?;
            if let Some(m) = self.matchings.get(i) {
                write!(f, "assign {i}->{}:", i + 1)?;
                for c in m.assignment() {
                    write!(f, " {c}")?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// Coarsens up to `m` times with the hybrid matcher.
pub fn coarsen(g: &Graph, m: usize, min_nodes: usize) -> CoarseningChain {
    coarsen_with(g, m, min_nodes, Matcher::Hybrid)
}

/// Coarsens up to `m` times. Stops early when a step would leave fewer than
/// `min_nodes` nodes or fails to shrink the graph.
pub fn coarsen_with(g: &Graph, m: usize, min_nodes: usize, matcher: Matcher) -> CoarseningChain {
    let mut chain = CoarseningChain::trivial(g.clone());
    chain.requested = m;
    for level in 0..m {
        let current = chain.coarsest();
        let (matching, next) = coarsen_step_with(current, matcher, level);
        if next.node_count() >= current.node_count() || next.node_count() < min_nodes {
            break;
        }
        chain.graphs.push(next);
        chain.matchings.push(matching);
    }
    chain
}

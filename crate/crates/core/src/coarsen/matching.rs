use std::io::{BufRead, Write};

use crate::error::{MileError, Result};
use crate::graph::Graph;

/// Fine-to-coarse node assignment, i.e. the binary matrix with exactly one 1
/// per row and at least one 1 per column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingMatrix {
    coarse_count: usize,
    assignment: Vec<usize>,
}

impl MatchingMatrix {
    pub fn identity(n: usize) -> Self {
        MatchingMatrix {
            coarse_count: n,
            assignment: (0..n).collect(),
        }
    }

    /// Validates that every super-node in `0..coarse_count` receives at least
    /// one fine node, with `coarse_count = 1 + max(assignment)`.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let coarse_count = assignment.iter().max().map_or(0, |&m| m + 1);
        let mut hit = vec![false; coarse_count];
        for &c in &assignment {
            hit[c] = true;
        }
        if let Some(empty) = hit.iter().position(|&h| !h) {
            return Err(MileError::Consistency(format!(
                "super-node {empty} has no fine nodes"
            )));
        }
        Ok(MatchingMatrix {
            coarse_count,
            assignment,
        })
    }

    pub fn fine_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn coarse_count(&self) -> usize {
        self.coarse_count
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Super-node of fine node `u`.
    pub fn coarse_of(&self, u: usize) -> usize {
        self.assignment[u]
    }

    pub fn is_identity(&self) -> bool {
        self.assignment.iter().enumerate().all(|(i, &c)| i == c)
    }

    /// Fine members of every super-node, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.coarse_count];
        for (u, &c) in self.assignment.iter().enumerate() {
            out[c].push(u);
        }
        out
    }

    /// Dense 0/1 matrix, `fine_count x coarse_count`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.assignment
            .iter()
            .map(|&c| {
                let mut row = vec![0.0; self.coarse_count];
                row[c] = 1.0;
                row
            })
            .collect()
    }
}

/// Assembles the matching matrix from structural-equivalence groups and
/// heavy-edge pairs. Nodes in neither become singleton super-nodes. Columns
/// are ordered by the smallest fine member of each super-node.
pub fn build_matching_matrix(
    n_fine: usize,
    sem: &[Vec<usize>],
    pairs: &[(usize, usize)],
) -> Result<MatchingMatrix> {
    const FREE: usize = usize::MAX;
    // group index per node, then reorder groups by their smallest member
    let mut group_of = vec![FREE; n_fine];
    let mut group_min: Vec<usize> = Vec::new();

    let mut place = |members: &mut dyn Iterator<Item = usize>| -> Result<()> {
        let gid = group_min.len();
        let mut lo = FREE;
        let mut size = 0;
        for u in members {
            if u >= n_fine {
                return Err(MileError::Dimension(format!(
                    "matched node {u} out of range for {n_fine} nodes"
                )));
            }
            if group_of[u] != FREE {
                return Err(MileError::Consistency(format!(
                    "node {u} appears in more than one matching"
                )));
            }
            group_of[u] = gid;
            lo = lo.min(u);
            size += 1;
        }
        if size == 0 {
            return Err(MileError::Consistency("empty matching".into()));
        }
        group_min.push(lo);
        Ok(())
    };
    for g in sem {
        place(&mut g.iter().copied())?;
    }
    for &(a, b) in pairs {
        place(&mut [a, b].into_iter())?;
    }

    let mut assignment = vec![0usize; n_fine];
    let mut coarse_of_group = vec![FREE; group_min.len()];
    let mut next = 0;
    // ascending fine id visits each super-node first at its smallest member
    for u in 0..n_fine {
        let c = match group_of[u] {
            FREE => {
                next += 1;
                next - 1
            }
            gid => {
                if coarse_of_group[gid] == FREE {
                    debug_assert_eq!(group_min[gid], u);
                    coarse_of_group[gid] = next;
                    next += 1;
                }
                coarse_of_group[gid]
            }
        };
        assignment[u] = c;
    }
    Ok(MatchingMatrix {
        coarse_count: next,
        assignment,
    })
}

/// Collapses `g` through `matching`: the sparse form of `Mᵀ A M`. Every stored
/// entry `(u, v, w)` adds `w` to `(c(u), c(v))`, so an edge inside a
/// super-node yields a self-loop of twice its weight.
pub fn coarse_adjacency(g: &Graph, matching: &MatchingMatrix) -> Result<Graph> {
    if matching.fine_count() != g.node_count() {
        return Err(MileError::Dimension(format!(
            "matching covers {} nodes but graph has {}",
            matching.fine_count(),
            g.node_count()
        )));
    }
    let c = matching.assignment();
    let mut entries = Vec::with_capacity(g.neighbor_ids().len());
    for u in 0..g.node_count() {
        for (v, w) in g.row(u) {
            entries.push((c[u], c[v], w));
        }
    }
    Ok(Graph::from_entries(matching.coarse_count(), entries))
}

/// Writes one `fine_id coarse_id` line per fine node.
pub fn write_assignment<W: Write>(m: &MatchingMatrix, mut out: W) -> std::io::Result<()> {
    for (u, c) in m.assignment().iter().enumerate() {
        writeln!(out, "{u} {c}")?;
    }
    Ok(())
}

pub fn read_assignment<R: BufRead>(reader: R) -> Result<MatchingMatrix> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| MileError::format(lineno, e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let f: Vec<usize> = t
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| MileError::format(lineno, "expected `fine_id coarse_id`"))?;
        let [u, c] = f[..] else {
            return Err(MileError::format(lineno, "expected `fine_id coarse_id`"));
        };
        pairs.push((lineno, u, c));
    }
    let n = pairs.len();
    let mut assignment = vec![usize::MAX; n];
    for (lineno, u, c) in pairs {
        if u >= n || assignment[u] != usize::MAX {
            return Err(MileError::format(
                lineno,
                format!("fine id {u} is duplicated or out of range 0..{n}"),
            ));
        }
        assignment[u] = c;
    }
    MatchingMatrix::from_assignment(assignment)
}

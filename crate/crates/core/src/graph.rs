//! Immutable undirected weighted graph in CSR form.
//!
//! Both directions of every edge are stored; a self-loop `(u, u, w)` is stored
//! once in row `u` and contributes `w` to `degree[u]`, so `degree` is exactly
//! the row sum of the adjacency matrix.

use std::io::{BufRead, Write};

use crate::error::{MileError, Result};

/// One undirected edge of an input edge list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, w: f64) -> Self {
        Edge { u, v, w }
    }

    pub fn unit(u: usize, v: usize) -> Self {
        Edge { u, v, w: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    row_offsets: Vec<usize>,
    neighbor_ids: Vec<usize>,
    edge_weights: Vec<f64>,
    degree: Vec<f64>,
}

impl Graph {
    /// Builds a symmetric graph from an undirected edge list.
    ///
    /// Parallel edges are summed, self-loops kept as a single entry. The node
    /// count is `max(hint, 1 + max id)`; with a hint, ids must be below it.
    pub fn from_edge_list(edges: &[Edge], node_count_hint: Option<usize>) -> Result<Graph> {
        let mut n = node_count_hint.unwrap_or(0);
        let mut entries = Vec::with_capacity(edges.len() * 2);
        for e in edges {
            if !(e.w > 0.0 && e.w.is_finite()) {
                return Err(MileError::WeightDomain {
                    u: e.u,
                    v: e.v,
                    w: e.w,
                });
            }
            if let Some(hint) = node_count_hint {
                if e.u >= hint || e.v >= hint {
                    return Err(MileError::Dimension(format!(
                        "edge ({}, {}) references a node outside 0..{hint}",
                        e.u, e.v
                    )));
                }
            }
            n = n.max(e.u + 1).max(e.v + 1);
            entries.push((e.u, e.v, e.w));
            if e.u != e.v {
                entries.push((e.v, e.u, e.w));
            }
        }
        Ok(Graph::from_entries(n, entries))
    }

    /// Builds a graph from already-symmetric directed entries `(row, col, w)`.
    /// Duplicate coordinates are summed. Callers guarantee symmetry.
    pub(crate) fn from_entries(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Graph {
        entries.sort_unstable_by_key(|e| (e.0, e.1));

        let mut row_offsets = vec![0usize; n + 1];
        let mut neighbor_ids = Vec::with_capacity(entries.len());
        let mut edge_weights: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, w) in entries {
            if last == Some((r, c)) {
                *edge_weights.last_mut().expect("previous entry") += w;
            } else {
                neighbor_ids.push(c);
                edge_weights.push(w);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        let degree = (0..n)
            .map(|u| {
                edge_weights[row_offsets[u]..row_offsets[u + 1]]
                    .iter()
                    .sum()
            })
            .collect();
        Graph {
            row_offsets,
            neighbor_ids,
            edge_weights,
            degree,
        }
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Graph {
        Graph::from_entries(n, Vec::new())
    }

    pub fn node_count(&self) -> usize {
        self.degree.len()
    }

    /// Number of undirected edges, self-loops counted once.
    pub fn edge_count(&self) -> usize {
        (0..self.node_count())
            .map(|u| self.row_ids(u).iter().filter(|&&v| v >= u).count())
            .sum()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn neighbor_ids(&self) -> &[usize] {
        &self.neighbor_ids
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degree
    }

    /// Column ids stored in row `u`, self-loop included. Panics if out of range.
    pub fn row_ids(&self, u: usize) -> &[usize] {
        &self.neighbor_ids[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    pub fn row_weights(&self, u: usize) -> &[f64] {
        &self.edge_weights[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    /// `(neighbor, weight)` pairs of row `u`, self-loop included.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row_ids(u)
            .iter()
            .copied()
            .zip(self.row_weights(u).iter().copied())
    }

    /// Distinct neighbors of `u` other than `u` itself, ascending.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_ids(u).iter().copied().filter(move |&v| v != u)
    }

    fn check(&self, u: usize) -> Result<()> {
        if u < self.node_count() {
            Ok(())
        } else {
            Err(MileError::Dimension(format!(
                "node {u} out of range for graph with {} nodes",
                self.node_count()
            )))
        }
    }

    /// Number of distinct neighbors of `u`; a self-loop does not count.
    pub fn neighbor_count(&self, u: usize) -> Result<usize> {
        self.check(u)?;
        let ids = self.row_ids(u);
        let has_loop = ids.binary_search(&u).is_ok();
        Ok(ids.len() - usize::from(has_loop))
    }

    pub fn weighted_degree(&self, u: usize) -> Result<f64> {
        self.check(u)?;
        Ok(self.degree[u])
    }

    /// Adjacency entry `A(u, v)`, or `None` if there is no edge.
    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        if u >= self.node_count() || v >= self.node_count() {
            return None;
        }
        self.row_ids(u)
            .binary_search(&v)
            .ok()
            .map(|k| self.row_weights(u)[k])
    }

    pub fn self_loop(&self, u: usize) -> f64 {
        self.weight(u, u).unwrap_or(0.0)
    }

    pub fn total_weight(&self) -> f64 {
        self.edge_weights.iter().sum()
    }

    /// Undirected edge list with `u <= v`, in row order.
    pub fn to_edge_list(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.node_count() {
            for (v, w) in self.row(u) {
                if v >= u {
                    out.push(Edge::new(u, v, w));
                }
            }
        }
        out
    }

    /// Dense copy of the adjacency matrix. Intended for tests and tiny graphs.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.node_count();
        let mut a = vec![vec![0.0; n]; n];
        for (u, row) in a.iter_mut().enumerate() {
            for (v, w) in self.row(u) {
                row[v] = w;
            }
        }
        a
    }
}

/// Parses the whitespace-separated `u v [w]` edge-list format.
///
/// Blank lines and lines starting with `#` are skipped. Errors carry the
/// 1-based line number.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Vec<Edge>> {
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| MileError::format(lineno, e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(MileError::format(
                lineno,
                format!("expected `u v [w]`, found {} fields", fields.len()),
            ));
        }
        let id = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| MileError::format(lineno, format!("invalid node id `{s}`")))
        };
        let u = id(fields[0])?;
        let v = id(fields[1])?;
        let w = match fields.get(2) {
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| MileError::format(lineno, format!("invalid weight `{s}`")))?,
            None => 1.0,
        };
        if !(w > 0.0 && w.is_finite()) {
            return Err(MileError::format(
                lineno,
                format!("edge weight must be positive, found {w}"),
            ));
        }
        edges.push(Edge { u, v, w });
    }
    Ok(edges)
}

/// Reads an edge list into a graph. A leading `# nodes N ...` comment, as
/// written by [`write_edge_list`], fixes the node count so trailing isolated
/// nodes survive a round trip.
pub fn read_graph<R: BufRead>(mut reader: R) -> Result<Graph> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| MileError::format(1, e.to_string()))?;
    let declared = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .and_then(|l| l.strip_prefix('#'))
        .and_then(|l| {
            let mut f = l.split_whitespace();
            (f.next() == Some("nodes")).then(|| f.next()?.parse::<usize>().ok())?
        });
    let edges = read_edge_list(text.as_bytes())?;
    Graph::from_edge_list(&edges, declared)
}

/// Writes the graph as an edge list, one `u v w` line per undirected edge.
pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# nodes {} edges {}", g.node_count(), g.edge_count())?;
    for e in g.to_edge_list() {
        writeln!(out, "{} {} {}", e.u, e.v, e.w)?;
    }
    Ok(())
}

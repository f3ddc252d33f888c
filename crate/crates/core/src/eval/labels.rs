use std::io::{BufRead, Write};

use crate::error::{MileError, Result};

/// Multi-label assignment: every node holds an ascending, duplicate-free set
/// of label ids below `label_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    label_count: usize,
    labels: Vec<Vec<usize>>,
}

impl LabelSet {
    pub fn new(label_count: usize, mut labels: Vec<Vec<usize>>) -> Result<Self> {
        for (u, set) in labels.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            if let Some(&bad) = set.iter().find(|&&l| l >= label_count) {
                return Err(MileError::Dimension(format!(
                    "node {u} has label {bad} but only {label_count} labels exist"
                )));
            }
        }
        Ok(LabelSet {
            label_count,
            labels,
        })
    }

    /// One label per node.
    pub fn single(label_count: usize, labels: &[usize]) -> Result<Self> {
        LabelSet::new(label_count, labels.iter().map(|&l| vec![l]).collect())
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn labels_of(&self, u: usize) -> &[usize] {
        &self.labels[u]
    }

    pub fn has(&self, u: usize, label: usize) -> bool {
        self.labels[u].binary_search(&label).is_ok()
    }

    /// Nodes with at least one label.
    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&u| !self.labels[u].is_empty())
            .collect()
    }

    /// Restriction to `nodes`, renumbered in the given order.
    pub fn subset(&self, nodes: &[usize]) -> LabelSet {
        LabelSet {
            label_count: self.label_count,
            labels: nodes.iter().map(|&u| self.labels[u].clone()).collect(),
        }
    }

    pub fn counts(&self) -> Vec<usize> {
        self.labels.iter().map(Vec::len).collect()
    }
}

/// Reads `node_id label_id [label_id ...]` lines. Lines for the same node
/// are merged. Nodes never mentioned have no labels; `node_count` (when
/// given) fixes the number of nodes, otherwise it is `1 + max id`.
pub fn read_labels<R: BufRead>(reader: R, node_count: Option<usize>) -> Result<LabelSet> {
    let mut entries: Vec<(usize, Vec<usize>)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| MileError::format(lineno, e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let ids: Vec<usize> = t
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| MileError::format(lineno, "expected `node_id label_id ...`"))?;
        if ids.len() < 2 {
            return Err(MileError::format(lineno, "expected at least one label"));
        }
        if let Some(n) = node_count {
            if ids[0] >= n {
                return Err(MileError::format(
                    lineno,
                    format!("node {} out of range for {n} nodes", ids[0]),
                ));
            }
        }
        entries.push((ids[0], ids[1..].to_vec()));
    }
    let n = node_count.unwrap_or_else(|| entries.iter().map(|(u, _)| u + 1).max().unwrap_or(0));
    let label_count = entries
        .iter()
        .flat_map(|(_, l)| l.iter().map(|x| x + 1))
        .max()
        .unwrap_or(0);
    let mut labels = vec![Vec::new(); n];
    for (u, ls) in entries {
        labels[u].extend(ls);
    }
    LabelSet::new(label_count, labels)
}

/// Writes one line per labeled node.
pub fn write_labels<W: Write>(labels: &LabelSet, mut out: W) -> std::io::Result<()> {
    for u in labels.labeled_nodes() {
        write!(out, "{u}")?;
        for l in labels.labels_of(u) {
            write!(out, " {l}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

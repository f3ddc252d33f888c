//! Structural equivalence matching: nodes with identical open neighborhoods.

use std::collections::HashMap;

use crate::graph::Graph;

/// Groups of two or more nodes sharing the same non-empty neighbor set.
///
/// Edge weights and self-loops are ignored, so equivalent nodes are never
/// adjacent to each other. Groups are sorted by smallest member and members
/// are ascending.
pub fn sem_groups(g: &Graph) -> Vec<Vec<usize>> {
    // bucket by neighbor list; the map key compares full lists, so hash
    // collisions never merge distinct neighborhoods
    let mut buckets: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for u in 0..g.node_count() {
        let nbrs: Vec<usize> = g.neighbors(u).collect();
        if nbrs.is_empty() {
            continue;
        }
        buckets.entry(nbrs).or_default().push(u);
    }
    let mut groups: Vec<Vec<usize>> = buckets.into_values().filter(|m| m.len() >= 2).collect();
    groups.sort_unstable_by_key(|m| m[0]);
    groups
}

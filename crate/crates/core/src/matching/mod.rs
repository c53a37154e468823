//! Offline matchers over a [`MatchGraph`].

pub mod alma;
pub mod appr;
pub mod blossom;
mod greedy;

pub use alma::{alma, alma_with, AlmaConfig};
pub use appr::{appr_assign, appr_pairing, appr_dispatch, ApprError};
pub use greedy::{greedy, greedy_with_order, random_match};

use crate::matchgraph::MatchGraph;
use serde::{Deserialize, Serialize};

/// Disjoint node pairs of a graph. Each pair is stored as `(lo, hi)` and the
/// list is sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched: Vec<usize>,
    pub total_weight: f64,
}

impl Matching {
    pub fn empty(node_count: usize) -> Self {
        Matching {
            pairs: Vec::new(),
            unmatched: (0..node_count).collect(),
            total_weight: 0.0,
        }
    }

    /// Builds a matching from chosen edge indices of `graph`.
    pub fn from_edges(graph: &MatchGraph, chosen: &[usize]) -> Self {
        let mut used = vec![false; graph.node_count];
        let mut pairs = Vec::with_capacity(chosen.len());
        let mut total_weight = 0.0;
        for &k in chosen {
            let e = &graph.edges[k];
            assert!(!used[e.u] && !used[e.v], "node matched twice");
            used[e.u] = true;
            used[e.v] = true;
            pairs.push((e.u.min(e.v), e.u.max(e.v)));
            total_weight += e.weight;
        }
        pairs.sort_unstable();
        let unmatched = (0..graph.node_count).filter(|&i| !used[i]).collect();
        Matching {
            pairs,
            unmatched,
            total_weight,
        }
    }

    /// Mate of every node, if any.
    pub fn mates(&self, node_count: usize) -> Vec<Option<usize>> {
        let mut mates = vec![None; node_count];
        for &(u, v) in &self.pairs {
            mates[u] = Some(v);
            mates[v] = Some(u);
        }
        mates
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Edge indices picked by a mate vector. For parallel edges the heaviest
/// one is used.
fn edges_from_mates(graph: &MatchGraph, mates: &[Option<usize>]) -> Vec<usize> {
    let mut best: Vec<Option<usize>> = vec![None; graph.node_count];
    for (k, e) in graph.edges.iter().enumerate() {
        if mates[e.u] == Some(e.v) {
            let lo = e.u.min(e.v);
            match best[lo] {
                Some(b) if graph.edges[b].weight >= e.weight => {}
                _ => best[lo] = Some(k),
            }
        }
    }
    best.into_iter().flatten().collect()
}

/// Maximum-weight matching (not necessarily perfect).
pub fn mwm(graph: &MatchGraph) -> Matching {
    solve_blossom(graph, false)
}

/// Maximum-weight matching among those of maximum cardinality.
pub fn mwm_max_cardinality(graph: &MatchGraph) -> Matching {
    solve_blossom(graph, true)
}

fn solve_blossom(graph: &MatchGraph, max_cardinality: bool) -> Matching {
    if graph.edges.is_empty() {
        return Matching::empty(graph.node_count);
    }
    let edges: Vec<(usize, usize, f64)> = graph.edges.iter().map(|e| (e.u, e.v, e.weight)).collect();
    let mates = blossom::max_weight_matching(graph.node_count, &edges, max_cardinality);
    Matching::from_edges(graph, &edges_from_mates(graph, &mates))
}

/// Edges an agent may still choose: positive weight, both ends free.
pub(crate) fn best_neighbor(
    graph: &MatchGraph,
    adj: &[Vec<usize>],
    i: usize,
    free: &[bool],
    skip: impl Fn(usize) -> bool,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &k in &adj[i] {
        let e = &graph.edges[k];
        let j = if e.u == i { e.v } else { e.u };
        if !free[j] || e.weight <= 0.0 || skip(j) {
            continue;
        }
        let better = match best {
            None => true,
            Some((bj, bw)) => e.weight > bw || (e.weight == bw && j < bj),
        };
        if better {
            best = Some((j, e.weight));
        }
    }
    best
}

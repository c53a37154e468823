use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{best_neighbor, Matching};
use crate::matchgraph::MatchGraph;

/// Visits nodes in a seeded random order; each still-free node takes its
/// heaviest free neighbor.
pub fn greedy(graph: &MatchGraph, seed: u64) -> Matching {
    let mut order: Vec<usize> = (0..graph.node_count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    greedy_with_order(graph, &order)
}

/// Greedy matching with an explicit visiting order. Ties between
/// neighbors go to the lowest node id; nodes without a positive edge to a
/// free neighbor stay unmatched.
pub fn greedy_with_order(graph: &MatchGraph, order: &[usize]) -> Matching {
    let adj = graph.adjacency();
    let mut free = vec![true; graph.node_count];
    let mut chosen = Vec::new();
    for &i in order {
        if !free[i] {
            continue;
        }
        let Some((j, _)) = best_neighbor(graph, &adj, i, &free, |_| false) else {
            continue;
        };
        let k = heaviest_edge(graph, &adj[i], i, j);
        free[i] = false;
        free[j] = false;
        chosen.push(k);
    }
    Matching::from_edges(graph, &chosen)
}

pub(crate) fn heaviest_edge(graph: &MatchGraph, incident: &[usize], i: usize, j: usize) -> usize {
    incident
        .iter()
        .copied()
        .filter(|&k| {
            let e = &graph.edges[k];
            (e.u == i && e.v == j) || (e.u == j && e.v == i)
        })
        .max_by(|&a, &b| graph.edges[a].weight.total_cmp(&graph.edges[b].weight))
        .expect("edge between chosen neighbors")
}

/// Random maximal matching over the edges of non-negative weight.
pub fn random_match(graph: &MatchGraph, seed: u64) -> Matching {
    let mut edges: Vec<usize> = (0..graph.edges.len())
        .filter(|&k| graph.edges[k].weight >= 0.0)
        .collect();
    edges.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut free = vec![true; graph.node_count];
    let mut chosen = Vec::new();
    for k in edges {
        let e = &graph.edges[k];
        if free[e.u] && free[e.v] {
            free[e.u] = false;
            free[e.v] = false;
            chosen.push(k);
        }
    }
    Matching::from_edges(graph, &chosen)
}

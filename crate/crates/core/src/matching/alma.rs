//! Decentralized matching by repeated contention and back-off.
//!
//! In a bipartite graph the left side are agents and the right side are
//! the contested resources. In a general graph every node is both.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use super::greedy::heaviest_edge;
use super::{best_neighbor, Matching};
use crate::matchgraph::{GraphKind, MatchGraph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlmaConfig {
    pub max_rounds: usize,
    /// Back-off probability is `(1 - loss)^exponent`; 1 gives the linear rule.
    pub backoff_exponent: f64,
}

impl Default for AlmaConfig {
    fn default() -> Self {
        AlmaConfig {
            max_rounds: 50,
            backoff_exponent: 1.0,
        }
    }
}

impl AlmaConfig {
    pub fn backoff_probability(&self, loss: f64) -> f64 {
        (1.0 - loss.clamp(0.0, 1.0)).powf(self.backoff_exponent)
    }
}

pub fn alma(graph: &MatchGraph, max_rounds: usize, seed: u64) -> Matching {
    alma_with(
        graph,
        &AlmaConfig {
            max_rounds,
            ..AlmaConfig::default()
        },
        seed,
    )
}

struct Bid {
    agent: usize,
    weight: f64,
    p: f64,
}

pub fn alma_with(graph: &MatchGraph, config: &AlmaConfig, seed: u64) -> Matching {
    assert!(config.max_rounds >= 1, "max_rounds must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let adj = graph.adjacency();
    let agents: Vec<usize> = match graph.kind {
        GraphKind::General => (0..graph.node_count).collect(),
        GraphKind::Bipartite { left } => (0..left).collect(),
    };
    let mut free = vec![true; graph.node_count];
    // resources an agent backed off from; cleared once nothing else is left
    let mut skipped: Vec<Vec<usize>> = vec![Vec::new(); graph.node_count];
    let mut chosen = Vec::new();

    for _round in 0..config.max_rounds {
        let mut contest: BTreeMap<usize, Vec<Bid>> = BTreeMap::new();
        for &a in &agents {
            if !free[a] {
                continue;
            }
            let mut target = best_neighbor(graph, &adj, a, &free, |j| skipped[a].contains(&j));
            if target.is_none() && !skipped[a].is_empty() {
                skipped[a].clear();
                target = best_neighbor(graph, &adj, a, &free, |_| false);
            }
            let Some((t, u_best)) = target else { continue };
            let loss = match best_neighbor(graph, &adj, a, &free, |j| j == t) {
                None => 1.0,
                Some((_, u_next)) => (u_best - u_next) / u_best,
            };
            contest.entry(t).or_default().push(Bid {
                agent: a,
                weight: u_best,
                p: config.backoff_probability(loss),
            });
        }
        if contest.is_empty() {
            break;
        }
        for (t, bids) in contest {
            let winner = if bids.len() == 1 {
                Some(bids[0].agent)
            } else {
                let mut stay = Vec::new();
                for bid in &bids {
                    if rng.random::<f64>() < bid.p {
                        skipped[bid.agent].push(t);
                    } else {
                        stay.push(bid);
                    }
                }
                match stay.len() {
                    1 => Some(stay[0].agent),
                    // nobody would ever yield: settle on the heaviest claim
                    n if n > 1 && stay.iter().all(|b| b.p == 0.0) => stay
                        .iter()
                        .max_by(|x, y| x.weight.total_cmp(&y.weight).then(y.agent.cmp(&x.agent)))
                        .map(|b| b.agent),
                    _ => None,
                }
            };
            if let Some(a) = winner {
                if free[a] && free[t] {
                    free[a] = false;
                    free[t] = false;
                    chosen.push(heaviest_edge(graph, &adj[a], a, t));
                }
            }
        }
    }
    Matching::from_edges(graph, &chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::StopOrder;

    #[test]
    fn one_agent_one_target() {
        let mut g = MatchGraph::new(GraphKind::Bipartite { left: 1 }, 2);
        g.push(0, 1, 3.0, StopOrder::Single);
        let m = alma(&g, 1, 0);
        assert_eq!(m.pairs, vec![(0, 1)]);
    }

    #[test]
    fn agent_without_alternative_wins() {
        // agent 0 only likes resource 2; agent 1 likes 2 and 3 equally
        let mut g = MatchGraph::new(GraphKind::Bipartite { left: 2 }, 4);
        g.push(0, 2, 1.0, StopOrder::Single);
        g.push(1, 2, 1.0, StopOrder::Single);
        g.push(1, 3, 1.0, StopOrder::Single);
        for seed in 0..50 {
            let m = alma(&g, 1, seed);
            assert!(m.pairs.contains(&(0, 2)), "seed {seed}");
            let m = alma(&g, 50, seed);
            assert_eq!(m.pairs, vec![(0, 2), (1, 3)]);
        }
    }

    #[test]
    fn backoff_rule() {
        let c = AlmaConfig::default();
        assert_eq!(c.backoff_probability(1.0), 0.0);
        assert_eq!(c.backoff_probability(0.0), 1.0);
        assert!((c.backoff_probability(0.25) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let g = MatchGraph::from_weights(
            6,
            &[(0, 1, 2.0), (1, 2, 2.0), (2, 3, 2.0), (3, 4, 1.0), (4, 5, 3.0), (0, 5, 1.5)],
        );
        for seed in 0..10 {
            assert_eq!(alma(&g, 50, seed), alma(&g, 50, seed));
        }
    }
}

//! Greedy Dual: primal-dual matching with delays. Requests sit in active
//! sets whose duals grow every minute; sets merge once an edge between
//! them becomes tight, and free requests inside a set are paired.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::geo::manhattan_distance;
use crate::model::{RequestId, SimTime, Trip};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Node {
    trip: Trip,
    t_open: f64,
    /// Accumulated dual growth of the sets this request has been in.
    reach: f64,
    /// Active-set label; sets merge by relabeling.
    set: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdState {
    meters_per_minute: f64,
    free: BTreeMap<RequestId, Node>,
    matched: Vec<(RequestId, RequestId)>,
}

impl GdState {
    pub fn new(meters_per_minute: f64) -> Self {
        assert!(meters_per_minute > 0.0);
        GdState {
            meters_per_minute,
            free: BTreeMap::new(),
            matched: Vec::new(),
        }
    }

    pub fn add(&mut self, id: RequestId, trip: Trip, t_open: SimTime) {
        self.free.insert(
            id,
            Node {
                trip,
                t_open: t_open.stamp(),
                reach: 0.0,
                set: id.0,
            },
        );
    }

    /// Withdraws a request (served elsewhere).
    pub fn remove(&mut self, id: RequestId) -> bool {
        self.free.remove(&id).is_some()
    }

    pub fn contains(&self, id: RequestId) -> bool {
        self.free.contains_key(&id)
    }

    pub fn dual(&self, id: RequestId) -> Option<f64> {
        self.free.get(&id).map(|n| n.reach)
    }

    /// Active-set representative of a free request.
    pub fn set_of(&self, id: RequestId) -> Option<u32> {
        self.free.get(&id).map(|n| n.set)
    }

    pub fn matched(&self) -> &[(RequestId, RequestId)] {
        &self.matched
    }

    /// Edge cost in minutes: spatial detour at average speed plus the gap
    /// between arrival times.
    pub fn cost(&self, a: RequestId, b: RequestId) -> f64 {
        edge_cost(&self.free[&a], &self.free[&b], self.meters_per_minute)
    }

    /// One minute of dual growth, merging and in-set pairing.
    pub fn tick(&mut self, _now: SimTime) -> Vec<(RequestId, RequestId)> {
        for node in self.free.values_mut() {
            node.reach += 1.0;
        }
        let ids: Vec<RequestId> = self.free.keys().copied().collect();
        let mut costs = Vec::new();
        for (x, &a) in ids.iter().enumerate() {
            for &b in &ids[x + 1..] {
                costs.push((self.cost(a, b), a, b));
            }
        }

        // Merge along every tight edge. Union-find over request ids makes
        // the final partition independent of processing order.
        let index: BTreeMap<RequestId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut parent: Vec<usize> = (0..ids.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        // existing sets first
        let mut first_of_set: BTreeMap<u32, usize> = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            let set = self.free[id].set;
            match first_of_set.get(&set) {
                Some(&j) => {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri.max(rj)] = ri.min(rj);
                }
                None => {
                    first_of_set.insert(set, i);
                }
            }
        }
        for &(c, a, b) in &costs {
            let (na, nb) = (&self.free[&a], &self.free[&b]);
            if na.set != nb.set && na.reach + nb.reach >= c {
                let (ra, rb) = (find(&mut parent, index[&a]), find(&mut parent, index[&b]));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        // canonical label per component: its smallest free id
        let mut canon: BTreeMap<usize, u32> = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            let root = find(&mut parent, i);
            let e = canon.entry(root).or_insert(id.0);
            *e = (*e).min(id.0);
        }
        for (i, id) in ids.iter().enumerate() {
            let root = find(&mut parent, i);
            self.free.get_mut(id).unwrap().set = canon[&root];
        }

        // Pair free requests inside each set: cheapest first, then lowest ids.
        costs.retain(|&(_, a, b)| self.free[&a].set == self.free[&b].set);
        costs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut out = Vec::new();
        for (_, a, b) in costs {
            if self.free.contains_key(&a) && self.free.contains_key(&b) {
                self.free.remove(&a);
                self.free.remove(&b);
                out.push((a, b));
            }
        }
        self.matched.extend_from_slice(&out);
        out
    }
}

fn edge_cost(a: &Node, b: &Node, meters_per_minute: f64) -> f64 {
    let spatial = manhattan_distance(a.trip.src, b.trip.src) + manhattan_distance(a.trip.dst, b.trip.dst);
    spatial / meters_per_minute + (a.t_open - b.t_open).abs()
}

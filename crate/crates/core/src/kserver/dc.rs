//! Double Coverage on a tree metric, simulated exactly.
//!
//! All unobstructed servers move toward the request at equal speed. A
//! server is obstructed once another server lies on its remaining path
//! (for co-located servers the lowest id keeps moving). The first server
//! to arrive serves the request.
//!
//! Because servers move at equal speed, a server can only be obstructed by
//! one that is closer to the request, and the paths of two servers to the
//! request merge at a single point. Processing servers by increasing
//! distance gives every halting time in closed form.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::hst::HstTree;
use crate::model::VehicleId;

/// Position on a tree: `offset` meters up from `node` toward its parent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreePoint {
    pub node: usize,
    pub offset: f64,
}

impl TreePoint {
    pub fn at(node: usize) -> Self {
        TreePoint { node, offset: 0.0 }
    }
}

/// Distance from a tree point to a node.
pub fn distance_to_node(t: &HstTree, p: TreePoint, x: usize) -> f64 {
    if p.offset == 0.0 {
        t.node_distance(p.node, x)
    } else if t.is_ancestor(p.node, x) {
        p.offset + t.node_distance(p.node, x)
    } else {
        let parent = t.parent(p.node).expect("offset on the root");
        t.up_len(p.node) - p.offset + t.node_distance(parent, x)
    }
}

fn ends(t: &HstTree, p: TreePoint) -> Vec<(usize, f64)> {
    let mut e = vec![(p.node, p.offset)];
    if p.offset > 0.0 {
        e.push((t.parent(p.node).expect("offset on the root"), t.up_len(p.node) - p.offset));
    }
    e
}

pub fn point_distance(t: &HstTree, p: TreePoint, q: TreePoint) -> f64 {
    if p.node == q.node {
        return (p.offset - q.offset).abs();
    }
    let mut best = f64::INFINITY;
    for (a, da) in ends(t, p) {
        for &(b, db) in &ends(t, q) {
            best = best.min(da + db + t.node_distance(a, b));
        }
    }
    best
}

/// Moves `p` by `dist` along its path to node `x`.
pub fn advance(t: &HstTree, mut p: TreePoint, x: usize, mut dist: f64) -> TreePoint {
    loop {
        if dist <= 0.0 {
            return p;
        }
        if t.is_ancestor(p.node, x) {
            // heading down: first to p.node, then along the child toward x
            if p.offset > 0.0 {
                if dist < p.offset {
                    p.offset -= dist;
                    return p;
                }
                dist -= p.offset;
                p.offset = 0.0;
                continue;
            }
            if p.node == x {
                return p;
            }
            let mut child = x;
            while t.parent(child) != Some(p.node) {
                child = t.parent(child).expect("x below p");
            }
            let len = t.up_len(child);
            if dist < len {
                return TreePoint {
                    node: child,
                    offset: len - dist,
                };
            }
            dist -= len;
            p = TreePoint::at(child);
        } else {
            let room = t.up_len(p.node) - p.offset;
            if dist < room {
                p.offset += dist;
                return p;
            }
            dist -= room;
            p = TreePoint::at(t.parent(p.node).expect("x not below the root"));
        }
    }
}

/// Virtual position of every vehicle on the tree.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HstDispatchState {
    pub positions: BTreeMap<VehicleId, TreePoint>,
}

impl HstDispatchState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(&mut self, id: VehicleId, node: usize) {
        self.positions.insert(id, TreePoint::at(node));
    }

    pub fn position(&self, id: VehicleId) -> Option<TreePoint> {
        self.positions.get(&id).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcOutcome {
    pub winner: VehicleId,
    /// Virtual distance moved by each participating vehicle.
    pub moved: Vec<(VehicleId, f64)>,
}

/// Serves a request at `source_leaf` with the vehicles in `free`, updating
/// their virtual positions.
pub fn dc_choose(t: &HstTree, state: &mut HstDispatchState, free: &[VehicleId], source_leaf: usize) -> DcOutcome {
    assert!(!free.is_empty(), "dispatch needs a free vehicle");
    let mut servers: Vec<(f64, VehicleId, TreePoint)> = free
        .iter()
        .map(|&id| {
            let p = state.position(id).expect("vehicle without a tree position");
            (distance_to_node(t, p, source_leaf), id, p)
        })
        .collect();
    servers.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let arrival = servers[0].0;
    let mut stop = vec![arrival; servers.len()];
    for k in 1..servers.len() {
        let (rs, _, ps) = servers[k];
        let mut halt = arrival.min(rs);
        for j in 0..k {
            let (rq, _, pq) = servers[j];
            // distance from the merge point of the two paths to the source
            let merge = ((rq + rs - point_distance(t, pq, ps)) / 2.0).clamp(0.0, rq);
            let reach = rq - merge;
            let tol = 1e-9 * (1.0 + rq);
            if stop[j] + tol >= reach {
                halt = halt.min(reach);
            }
        }
        stop[k] = halt;
    }
    let mut moved = Vec::with_capacity(servers.len());
    for (k, &(_, id, p)) in servers.iter().enumerate() {
        let d = stop[k];
        let q = if k == 0 {
            TreePoint::at(source_leaf)
        } else {
            advance(t, p, source_leaf, d)
        };
        state.positions.insert(id, q);
        moved.push((id, d));
    }
    moved.sort_by_key(|m| m.0);
    DcOutcome {
        winner: servers[0].1,
        moved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// root(0) -> a(1) -> {x(3), y(4)}; root -> b(2) -> z(5)
    fn two_level() -> HstTree {
        let parents = [None, Some(0), Some(0), Some(1), Some(1), Some(2)];
        let lens = [0.0, 8.0, 8.0, 2.0, 2.0, 2.0];
        HstTree::from_parts(4.0, &parents, &lens, &[3, 4, 5])
    }

    #[test]
    fn single_vehicle_wins() {
        let t = two_level();
        let mut s = HstDispatchState::new();
        s.place(VehicleId(0), 5);
        let out = dc_choose(&t, &mut s, &[VehicleId(0)], 3);
        assert_eq!(out.winner, VehicleId(0));
        assert_eq!(s.position(VehicleId(0)), Some(TreePoint::at(3)));
        assert_eq!(out.moved, vec![(VehicleId(0), 20.0)]);
    }

    #[test]
    fn near_sibling_wins_and_blocks_the_far_one() {
        let t = two_level();
        let mut s = HstDispatchState::new();
        s.place(VehicleId(1), 4);
        s.place(VehicleId(2), 5);
        let out = dc_choose(&t, &mut s, &[VehicleId(1), VehicleId(2)], 3);
        assert_eq!(out.winner, VehicleId(1));
        // v1 reaches a (on v2's path) after 2; v2 has moved 2 up from z
        assert_eq!(out.moved, vec![(VehicleId(1), 4.0), (VehicleId(2), 2.0)]);
        assert_eq!(s.position(VehicleId(2)), Some(TreePoint::at(2)));
        assert_eq!(s.position(VehicleId(1)), Some(TreePoint::at(3)));
    }

    #[test]
    fn vehicle_on_source_wins_without_moving() {
        let t = two_level();
        let mut s = HstDispatchState::new();
        s.place(VehicleId(0), 4);
        s.place(VehicleId(1), 3);
        let out = dc_choose(&t, &mut s, &[VehicleId(0), VehicleId(1)], 3);
        assert_eq!(out.winner, VehicleId(1));
        assert!(out.moved.iter().all(|m| m.1 == 0.0));
        assert_eq!(s.position(VehicleId(0)), Some(TreePoint::at(4)));
    }

    #[test]
    fn co_located_tie_goes_to_lowest_id() {
        let t = two_level();
        let mut s = HstDispatchState::new();
        s.place(VehicleId(5), 5);
        s.place(VehicleId(2), 5);
        let out = dc_choose(&t, &mut s, &[VehicleId(5), VehicleId(2)], 3);
        assert_eq!(out.winner, VehicleId(2));
        assert_eq!(out.moved, vec![(VehicleId(2), 20.0), (VehicleId(5), 0.0)]);
    }

    #[test]
    fn advance_walks_up_then_down() {
        let t = two_level();
        let p = advance(&t, TreePoint::at(5), 3, 3.0);
        assert_eq!(p, TreePoint { node: 2, offset: 1.0 });
        let p = advance(&t, TreePoint::at(5), 3, 13.0);
        assert_eq!(p, TreePoint { node: 1, offset: 5.0 });
        assert_eq!(distance_to_node(&t, p, 3), 7.0);
        assert_eq!(point_distance(&t, p, TreePoint::at(5)), 13.0);
    }

    /// Small trees with integer edge lengths, a few servers and a request.
    fn instance() -> impl Strategy<Value = (HstTree, Vec<usize>, usize)> {
        (3usize..12)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    proptest::collection::vec(0usize..1000, n),
                    proptest::collection::vec(1u32..6, n),
                    proptest::collection::vec(0usize..1000, 1..6),
                    0usize..1000,
                )
            })
            .prop_map(|(n, par, lens, servers, x)| {
                let parents: Vec<Option<usize>> = (0..n).map(|i| (i > 0).then(|| par[i] % i)).collect();
                let lens: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { f64::from(lens[i]) }).collect();
                let t = HstTree::from_parts(2.0, &parents, &lens, &[]);
                let servers = servers.into_iter().map(|s| s % n).collect();
                (t, servers, x % n)
            })
    }

    /// Time-stepped reference: at every step recompute who is obstructed
    /// straight from the definition and move the others by `dt`.
    fn stepped(t: &HstTree, start: &[TreePoint], x: usize) -> (usize, Vec<TreePoint>) {
        let dt = 0.125;
        let mut pos = start.to_vec();
        loop {
            let r: Vec<f64> = pos.iter().map(|&p| distance_to_node(t, p, x)).collect();
            let arrived: Vec<usize> = (0..pos.len()).filter(|&i| r[i] == 0.0).collect();
            if let Some(&w) = arrived.first() {
                return (w, pos);
            }
            let active: Vec<bool> = (0..pos.len())
                .map(|i| {
                    !(0..pos.len()).any(|j| {
                        j != i
                            && point_distance(t, pos[i], pos[j]) + r[j] == r[i]
                            && (r[j] < r[i] || j < i)
                    })
                })
                .collect();
            for i in 0..pos.len() {
                if active[i] {
                    pos[i] = advance(t, pos[i], x, dt);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn matches_stepped_simulation((t, servers, x) in instance()) {
            let ids: Vec<VehicleId> = (0..servers.len() as u32).map(VehicleId).collect();
            let mut state = HstDispatchState::new();
            for (i, &s) in servers.iter().enumerate() {
                state.place(ids[i], s);
            }
            let start: Vec<TreePoint> = servers.iter().map(|&s| TreePoint::at(s)).collect();
            let (w, expect) = stepped(&t, &start, x);
            let out = dc_choose(&t, &mut state, &ids, x);
            prop_assert_eq!(out.winner, ids[w]);
            let win_moved = out.moved.iter().find(|m| m.0 == out.winner).unwrap().1;
            for (i, id) in ids.iter().enumerate() {
                let got = state.position(*id).unwrap();
                prop_assert!(point_distance(&t, got, expect[i]) < 1e-9, "vehicle {} at {:?}, expected {:?}", i, got, expect[i]);
                // nobody travels further than the winner
                let m = out.moved.iter().find(|m| m.0 == *id).unwrap().1;
                prop_assert!(m <= win_moved + 1e-9);
            }
        }
    }
}

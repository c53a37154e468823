//! k-Taxi dispatch on an HST by an electrical-flow interpretation.
//!
//! The Steiner subtree spanning the request leaf and the vehicle leaves is
//! read as a resistor network (edge length = resistance). A unit current
//! enters at the request leaf and leaves through the vehicle leaves, which
//! are grounded. The current absorbed by a vehicle is its selection
//! probability.

use rand::Rng;
use std::collections::BTreeMap;

use super::dc::HstDispatchState;
use super::sample;
use crate::hst::HstTree;
use crate::model::VehicleId;

/// Steiner subtree of `t` over `terminals`, as adjacency with resistances.
pub(crate) fn steiner_tree(t: &HstTree, terminals: &[usize]) -> BTreeMap<usize, Vec<(usize, f64)>> {
    let mut marked = BTreeMap::<usize, ()>::new();
    let top = terminals.iter().skip(1).fold(terminals[0], |acc, &x| t.lca(acc, x));
    for &leaf in terminals {
        let mut n = leaf;
        marked.insert(n, ());
        while n != top {
            n = t.parent(n).expect("terminal below the top");
            marked.insert(n, ());
        }
    }
    let mut adj: BTreeMap<usize, Vec<(usize, f64)>> = marked.keys().map(|&n| (n, Vec::new())).collect();
    for &n in marked.keys() {
        if n == top {
            continue;
        }
        let p = t.parent(n).unwrap();
        let r = t.up_len(n);
        adj.get_mut(&n).unwrap().push((p, r));
        adj.get_mut(&p).unwrap().push((n, r));
    }
    adj
}

/// Probability of each vehicle in `free` being chosen for a request at
/// `source_leaf`. Vehicles sharing a leaf split that leaf's current evenly.
pub fn ktaxi_probabilities(
    t: &HstTree,
    state: &HstDispatchState,
    free: &[VehicleId],
    source_leaf: usize,
) -> Vec<(VehicleId, f64)> {
    assert!(!free.is_empty(), "dispatch needs a free vehicle");
    let mut at_leaf: BTreeMap<usize, Vec<VehicleId>> = BTreeMap::new();
    for &id in free {
        let p = state.position(id).expect("vehicle without a tree position");
        debug_assert_eq!(p.offset, 0.0, "k-taxi positions are nodes");
        at_leaf.entry(p.node).or_default().push(id);
    }
    let mut out: Vec<(VehicleId, f64)> = free.iter().map(|&id| (id, 0.0)).collect();
    let absorb = |node: usize, current: f64, out: &mut Vec<(VehicleId, f64)>| {
        let group = &at_leaf[&node];
        let share = current / group.len() as f64;
        for id in group {
            out.iter_mut().find(|o| o.0 == *id).unwrap().1 += share;
        }
    };
    if at_leaf.contains_key(&source_leaf) {
        absorb(source_leaf, 1.0, &mut out);
        return out;
    }

    let mut terminals: Vec<usize> = at_leaf.keys().copied().collect();
    terminals.push(source_leaf);
    let adj = steiner_tree(t, &terminals);

    // Root at the source; order nodes so children follow parents.
    let mut order = vec![source_leaf];
    let mut parent_of: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        for &(v, r) in &adj[&u] {
            if Some(&v) != parent_of.get(&u).map(|p| &p.0) && v != source_leaf && !parent_of.contains_key(&v) {
                parent_of.insert(v, (u, r));
                order.push(v);
            }
        }
        i += 1;
    }
    // Effective resistance to ground below each node, leaves first.
    let mut reff: BTreeMap<usize, f64> = BTreeMap::new();
    for &u in order.iter().rev() {
        if at_leaf.contains_key(&u) {
            reff.insert(u, 0.0);
            continue;
        }
        let g: f64 = adj[&u]
            .iter()
            .filter(|(v, _)| parent_of.get(v).map(|p| p.0) == Some(u))
            .map(|&(v, r)| 1.0 / (r + reff[&v]))
            .sum();
        reff.insert(u, if g > 0.0 { 1.0 / g } else { f64::INFINITY });
    }
    // Push the unit current down, splitting by branch conductance.
    let mut current: BTreeMap<usize, f64> = BTreeMap::new();
    current.insert(source_leaf, 1.0);
    for &u in &order {
        let c = current[&u];
        if at_leaf.contains_key(&u) {
            absorb(u, c, &mut out);
            continue;
        }
        let kids: Vec<(usize, f64)> = adj[&u]
            .iter()
            .filter(|(v, _)| parent_of.get(v).map(|p| p.0) == Some(u))
            .map(|&(v, r)| (v, 1.0 / (r + reff[&v])))
            .collect();
        let total: f64 = kids.iter().map(|k| k.1).sum();
        for (v, g) in kids {
            current.insert(v, c * g / total);
        }
    }
    out
}

/// Samples a vehicle and moves its virtual position to the request leaf.
pub fn ktaxi_choose<R: Rng + ?Sized>(
    t: &HstTree,
    state: &mut HstDispatchState,
    free: &[VehicleId],
    source_leaf: usize,
    rng: &mut R,
) -> VehicleId {
    let winner = sample(&ktaxi_probabilities(t, state, free, source_leaf), rng);
    state.place(winner, source_leaf);
    winner
}

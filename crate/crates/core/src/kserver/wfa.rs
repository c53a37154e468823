//! Windowed Work Function Algorithm.
//!
//! The work function of a configuration is the cheapest way to serve the
//! rides in the window, in order, starting from the vehicle positions at
//! the start of the window and ending in that configuration. It is
//! computed as a min-cost flow on `2|P| + 2|V| + 2` nodes.

use std::collections::{BTreeMap, VecDeque};

use super::{DispatchContext, FreeVehicle};
use crate::geo::manhattan_distance;
use crate::model::{GeoPoint, VehicleId};

#[derive(Debug, Clone, PartialEq)]
struct WindowRide {
    src: GeoPoint,
    dst: GeoPoint,
    /// Vehicle positions right before this ride was dispatched.
    before: BTreeMap<VehicleId, GeoPoint>,
}

/// The last `w` served rides and the positions they started from.
#[derive(Debug, Clone, PartialEq)]
pub struct WfaWindow {
    pub w: usize,
    /// Candidate vehicles considered per decision (nearest to the source).
    pub candidates: usize,
    rides: VecDeque<WindowRide>,
}

impl WfaWindow {
    pub fn new(w: usize, candidates: usize) -> Self {
        WfaWindow {
            w,
            candidates: candidates.max(1),
            rides: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rides.is_empty()
    }

    /// Records a dispatched ride. `before` are the vehicle positions just
    /// before the dispatch.
    pub fn push(&mut self, src: GeoPoint, dst: GeoPoint, before: impl IntoIterator<Item = (VehicleId, GeoPoint)>) {
        if self.w == 0 {
            return;
        }
        if self.rides.len() == self.w {
            self.rides.pop_front();
        }
        self.rides.push_back(WindowRide {
            src,
            dst,
            before: before.into_iter().collect(),
        });
    }

    /// Ride endpoints currently in the window, oldest first.
    pub fn rides(&self) -> impl Iterator<Item = (GeoPoint, GeoPoint)> + '_ {
        self.rides.iter().map(|r| (r.src, r.dst))
    }

    fn start_position(&self, v: &FreeVehicle) -> GeoPoint {
        self.rides
            .front()
            .and_then(|r| r.before.get(&v.id).copied())
            .unwrap_or(v.pos)
    }
}

/// Work function value: cheapest cost to serve `rides` in order from
/// `start` and end in `end` (as a set of positions, `|end| == |start|`).
/// Includes the fixed source-to-destination legs.
pub fn work_function(start: &[GeoPoint], rides: &[(GeoPoint, GeoPoint)], end: &[GeoPoint]) -> f64 {
    assert_eq!(start.len(), end.len());
    let k = start.len();
    let p = rides.len();
    if k == 0 {
        return if p == 0 { 0.0 } else { f64::INFINITY };
    }
    // nodes: 0 = S, 1 = T, vehicles 2.., ride-in, ride-out, ends
    let s = 0;
    let t = 1;
    let veh = |j: usize| 2 + j;
    let rin = |r: usize| 2 + k + r;
    let rout = |r: usize| 2 + k + p + r;
    let fin = |l: usize| 2 + k + 2 * p + l;
    let n = 2 + 2 * k + 2 * p;
    let mut arcs: Vec<(usize, usize, f64)> = Vec::new();
    for j in 0..k {
        arcs.push((s, veh(j), 0.0));
        for r in 0..p {
            arcs.push((veh(j), rin(r), manhattan_distance(start[j], rides[r].0)));
        }
        for (l, e) in end.iter().enumerate() {
            arcs.push((veh(j), fin(l), manhattan_distance(start[j], *e)));
        }
    }
    for r in 0..p {
        for r2 in (r + 1)..p {
            arcs.push((rout(r), rin(r2), manhattan_distance(rides[r].1, rides[r2].0)));
        }
        for (l, e) in end.iter().enumerate() {
            arcs.push((rout(r), fin(l), manhattan_distance(rides[r].1, *e)));
        }
    }
    for l in 0..k {
        arcs.push((fin(l), t, 0.0));
    }
    // every ride must be served: a large reward on its own arc
    let big = 1.0 + arcs.iter().map(|a| a.2).sum::<f64>();
    for r in 0..p {
        arcs.push((rin(r), rout(r), -big));
    }
    let mut flow = MinCostFlow::new(n);
    for (u, v, c) in arcs {
        flow.add_arc(u, v, 1, c);
    }
    let (sent, cost) = flow.run(s, t, k as i64);
    debug_assert_eq!(sent, k as i64);
    let legs: f64 = rides.iter().map(|r| manhattan_distance(r.0, r.1)).sum();
    cost + big * p as f64 + legs
}

/// Picks the vehicle minimizing work function of the configuration with
/// that vehicle moved to the source, plus its approach distance. Only the
/// `candidates` vehicles nearest the source take part.
pub fn wfa_choose(win: &WfaWindow, ctx: &DispatchContext) -> VehicleId {
    let mut near: Vec<(f64, &FreeVehicle)> = ctx
        .vehicles
        .iter()
        .map(|v| (manhattan_distance(v.pos, ctx.source), v))
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
    near.truncate(win.candidates);
    if near.len() == 1 {
        return near[0].1.id;
    }
    let start: Vec<GeoPoint> = near.iter().map(|(_, v)| win.start_position(v)).collect();
    let rides: Vec<(GeoPoint, GeoPoint)> = win.rides().collect();
    let current: Vec<GeoPoint> = near.iter().map(|(_, v)| v.pos).collect();
    let mut best: Option<(f64, VehicleId)> = None;
    for (i, (d, v)) in near.iter().enumerate() {
        let mut end = current.clone();
        end[i] = ctx.source;
        let score = work_function(&start, &rides, &end) + d;
        let better = match best {
            None => true,
            Some((b, id)) => score < b - 1e-9 * b.abs().max(1.0) || (score <= b + 1e-9 * b.abs().max(1.0) && v.id < id),
        };
        if better {
            best = Some((score, v.id));
        }
    }
    best.unwrap().1
}

/// Successive shortest paths with potentials. Initial potentials come from
/// Bellman-Ford because arc costs may be negative.
struct MinCostFlow {
    n: usize,
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl MinCostFlow {
    fn new(n: usize) -> Self {
        MinCostFlow {
            n,
            to: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add_arc(&mut self, u: usize, v: usize, cap: i64, cost: f64) {
        self.adj[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(cap);
        self.cost.push(cost);
        self.adj[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0);
        self.cost.push(-cost);
    }

    fn run(&mut self, s: usize, t: usize, want: i64) -> (i64, f64) {
        let inf = f64::INFINITY;
        let mut pot = vec![inf; self.n];
        pot[s] = 0.0;
        for _ in 0..self.n {
            let mut changed = false;
            for u in 0..self.n {
                if pot[u] == inf {
                    continue;
                }
                for &a in &self.adj[u] {
                    if self.cap[a] > 0 && pot[u] + self.cost[a] < pot[self.to[a]] {
                        pot[self.to[a]] = pot[u] + self.cost[a];
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for p in pot.iter_mut() {
            if *p == inf {
                *p = 0.0;
            }
        }

        let mut sent = 0;
        let mut total = 0.0;
        while sent < want {
            // Dijkstra on reduced costs (dense graph, small n)
            let mut dist = vec![inf; self.n];
            let mut via = vec![usize::MAX; self.n];
            let mut done = vec![false; self.n];
            dist[s] = 0.0;
            loop {
                let mut u = usize::MAX;
                for v in 0..self.n {
                    if !done[v] && dist[v] < inf && (u == usize::MAX || dist[v] < dist[u]) {
                        u = v;
                    }
                }
                if u == usize::MAX {
                    break;
                }
                done[u] = true;
                for &a in &self.adj[u] {
                    let v = self.to[a];
                    if self.cap[a] <= 0 || done[v] {
                        continue;
                    }
                    let reduced = (self.cost[a] + pot[u] - pot[v]).max(0.0);
                    if dist[u] + reduced < dist[v] {
                        dist[v] = dist[u] + reduced;
                        via[v] = a;
                    }
                }
            }
            if dist[t] == inf {
                break;
            }
            for v in 0..self.n {
                if dist[v] < inf {
                    pot[v] += dist[v];
                }
            }
            let mut v = t;
            while v != s {
                let a = via[v];
                self.cap[a] -= 1;
                self.cap[a ^ 1] += 1;
                total += self.cost[a];
                v = self.to[a ^ 1];
            }
            sent += 1;
        }
        (sent, total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::EARTH_RADIUS_M;
    use proptest::prelude::*;

    fn m(x: f64, y: f64) -> GeoPoint {
        GeoPoint {
            lat: 40.0 + (x / EARTH_RADIUS_M).to_degrees(),
            lon: -73.9 + (y / EARTH_RADIUS_M).to_degrees(),
        }
    }

    fn fv(id: u32, p: GeoPoint) -> FreeVehicle {
        FreeVehicle {
            id: VehicleId(id),
            pos: p,
            odometer_m: 0.0,
        }
    }

    /// Every way of assigning rides to vehicles in order, then the best
    /// matching of final positions onto the target configuration.
    fn brute_force(start: &[GeoPoint], rides: &[(GeoPoint, GeoPoint)], end: &[GeoPoint]) -> f64 {
        let k = start.len();
        let p = rides.len();
        let mut best = f64::INFINITY;
        for code in 0..k.pow(p as u32) {
            let mut pos = start.to_vec();
            let mut cost = 0.0;
            let mut c = code;
            for r in rides {
                let j = c % k;
                c /= k;
                cost += manhattan_distance(pos[j], r.0) + manhattan_distance(r.0, r.1);
                pos[j] = r.1;
            }
            best = best.min(cost + best_matching(&pos, end));
        }
        best
    }

    fn best_matching(from: &[GeoPoint], to: &[GeoPoint]) -> f64 {
        fn rec(from: &[GeoPoint], to: &[GeoPoint], used: &mut Vec<bool>, i: usize) -> f64 {
            if i == from.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..to.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(manhattan_distance(from[i], to[j]) + rec(from, to, used, i + 1));
                    used[j] = false;
                }
            }
            best
        }
        rec(from, to, &mut vec![false; to.len()], 0)
    }

    #[test]
    fn empty_window_is_nearest_vehicle() {
        let win = WfaWindow::new(8, 8);
        let ctx = DispatchContext::new(vec![fv(0, m(900.0, 0.0)), fv(1, m(200.0, 50.0)), fv(2, m(0.0, 700.0))], m(0.0, 0.0));
        assert_eq!(wfa_choose(&win, &ctx), VehicleId(1));
    }

    #[test]
    fn single_vehicle() {
        let mut win = WfaWindow::new(8, 8);
        win.push(m(0.0, 0.0), m(100.0, 0.0), [(VehicleId(3), m(5.0, 5.0))]);
        let ctx = DispatchContext::new(vec![fv(3, m(100.0, 0.0))], m(400.0, 0.0));
        assert_eq!(wfa_choose(&win, &ctx), VehicleId(3));
    }

    #[test]
    fn window_slides() {
        let mut win = WfaWindow::new(2, 8);
        for i in 0..5 {
            win.push(m(f64::from(i), 0.0), m(0.0, 0.0), []);
        }
        assert_eq!(win.len(), 2);
        assert_eq!(win.rides().next().unwrap().0, m(3.0, 0.0));
    }

    fn pt() -> impl Strategy<Value = GeoPoint> {
        (0.0f64..3000.0, 0.0f64..3000.0).prop_map(|(x, y)| m(x, y))
    }

    proptest! {
        #[test]
        fn flow_matches_brute_force(
            k in 1usize..=3,
            p in 0usize..=3,
            pts in proptest::collection::vec(pt(), 12),
        ) {
            let start = &pts[0..k];
            let end = &pts[3..3 + k];
            let rides: Vec<(GeoPoint, GeoPoint)> = (0..p).map(|r| (pts[6 + r], pts[9 + r])).collect();
            let flow = work_function(start, &rides, end);
            let brute = brute_force(start, &rides, end);
            prop_assert!((flow - brute).abs() <= 1e-6 * brute.max(1.0), "flow {flow} brute {brute}");
        }

        /// With the window covering every ride so far, each decision agrees
        /// with the brute-force work function.
        #[test]
        fn choices_agree_with_brute_force(
            vs in proptest::collection::vec(pt(), 3),
            reqs in proptest::collection::vec((pt(), pt()), 1..=3),
        ) {
            let mut win = WfaWindow::new(8, 8);
            let mut fleet: Vec<FreeVehicle> = vs.iter().enumerate().map(|(i, p)| fv(i as u32, *p)).collect();
            let start: Vec<GeoPoint> = vs.clone();
            for (src, dst) in reqs {
                let ctx = DispatchContext::new(fleet.clone(), src);
                let got = wfa_choose(&win, &ctx);
                let rides: Vec<(GeoPoint, GeoPoint)> = win.rides().collect();
                let score = |i: usize| {
                    let mut end: Vec<GeoPoint> = fleet.iter().map(|v| v.pos).collect();
                    end[i] = src;
                    brute_force(&start, &rides, &end) + manhattan_distance(fleet[i].pos, src)
                };
                let best = (0..fleet.len()).map(score).fold(f64::INFINITY, f64::min);
                let chosen = fleet.iter().position(|v| v.id == got).unwrap();
                prop_assert!((score(chosen) - best).abs() <= 1e-6 * best.max(1.0));
                win.push(src, dst, fleet.iter().map(|v| (v.id, v.pos)));
                fleet[chosen].pos = dst;
            }
        }
    }
}

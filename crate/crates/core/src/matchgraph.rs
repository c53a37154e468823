//! Weighted graphs for request pairing (general) and ride dispatch
//! (bipartite).
//!
//! Nodes are dense indices. In a request graph node `i` is `requests[i]`.
//! In a ride–taxi graph nodes `0..left` are rides and `left..` are
//! vehicles, in the order they were passed to the builder.

use crate::geo::{manhattan_distance, shared_route, shared_route_from, StopOrder};
use crate::model::{Request, RequestId, Ride, RideId, Trip, Vehicle};

/// Reciprocal weights treat anything closer than this as this close.
pub const MIN_DISPATCH_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    General,
    /// Nodes `0..left` on one side, the rest on the other.
    Bipartite { left: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    /// Route order realizing the weight.
    pub order: StopOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchGraph {
    pub kind: GraphKind,
    pub node_count: usize,
    pub edges: Vec<MatchEdge>,
}

impl MatchGraph {
    pub fn new(kind: GraphKind, node_count: usize) -> Self {
        MatchGraph {
            kind,
            node_count,
            edges: Vec::new(),
        }
    }

    /// Plain weighted graph, mostly for tests and tools.
    pub fn from_weights(node_count: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut g = MatchGraph::new(GraphKind::General, node_count);
        for &(u, v, weight) in edges {
            g.push(u, v, weight, StopOrder::Single);
        }
        g
    }

    pub fn push(&mut self, u: usize, v: usize, weight: f64, order: StopOrder) {
        debug_assert!(u != v && u < self.node_count && v < self.node_count);
        debug_assert!(weight.is_finite());
        if let GraphKind::Bipartite { left } = self.kind {
            debug_assert!((u < left) != (v < left), "bipartite edge on one side");
        }
        self.edges.push(MatchEdge { u, v, weight, order });
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Adjacency as edge indices per node.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.u].push(k);
            adj[e.v].push(k);
        }
        adj
    }
}

/// Distance saved by serving two trips together instead of separately.
pub fn pairing_saving(a: &Trip, b: &Trip) -> (StopOrder, f64) {
    let (order, shared) = shared_route(a, b);
    let separate = manhattan_distance(a.src, a.dst) + manhattan_distance(b.src, b.dst);
    (order, separate - shared)
}

/// Request–request graph; an edge exists iff sharing saves distance.
/// `max_pickup_gap_m` optionally skips pairs whose pickups are further
/// apart than the cutoff.
pub fn build_request_graph_with(trips: &[Trip], max_pickup_gap_m: Option<f64>) -> MatchGraph {
    let mut g = MatchGraph::new(GraphKind::General, trips.len());
    for i in 0..trips.len() {
        for j in (i + 1)..trips.len() {
            if let Some(cut) = max_pickup_gap_m {
                if manhattan_distance(trips[i].src, trips[j].src) > cut {
                    continue;
                }
            }
            let (order, w) = pairing_saving(&trips[i], &trips[j]);
            if w > 0.0 {
                g.push(i, j, w, order);
            }
        }
    }
    g
}

pub fn build_request_graph(requests: &[Request]) -> MatchGraph {
    let trips: Vec<Trip> = requests.iter().map(Request::trip).collect();
    build_request_graph_with(&trips, None)
}

/// Builds a ride for one request or a pair, using the shortest stop order.
pub fn make_ride(id: RideId, a: (RequestId, Trip), b: Option<(RequestId, Trip)>) -> Ride {
    let (ra, ta) = a;
    match b {
        None => Ride {
            id,
            r1: ra,
            r2: ra,
            trips: [ta, ta],
            order: StopOrder::Single.stops(ra, &ta, ra, &ta),
            total_route_m: manhattan_distance(ta.src, ta.dst),
            assigned_vehicle: None,
        },
        Some((rb, tb)) => {
            let (order, meters) = shared_route(&ta, &tb);
            Ride {
                id,
                r1: ra,
                r2: rb,
                trips: [ta, tb],
                order: order.stops(ra, &ta, rb, &tb),
                total_route_m: meters,
                assigned_vehicle: None,
            }
        }
    }
}

/// Trips of a ride: one for a single ride, two for a shared one.
pub fn ride_trips(ride: &Ride) -> (Trip, Option<Trip>) {
    (ride.trips[0], (!ride.is_single()).then_some(ride.trips[1]))
}

/// Weight of dispatching a vehicle at `pos` to a ride: the reciprocal of
/// the full approach-and-service distance.
pub fn dispatch_weight(pos: crate::model::GeoPoint, a: &Trip, b: Option<&Trip>) -> (StopOrder, f64) {
    let (order, meters) = shared_route_from(pos, a, b);
    (order, 1.0 / meters.max(MIN_DISPATCH_DISTANCE_M))
}

/// Complete bipartite ride–taxi graph with reciprocal-distance weights.
pub fn build_ride_taxi_graph(rides: &[(Trip, Option<Trip>)], vehicles: &[Vehicle]) -> MatchGraph {
    let left = rides.len();
    let mut g = MatchGraph::new(GraphKind::Bipartite { left }, left + vehicles.len());
    for (i, (a, b)) in rides.iter().enumerate() {
        for (j, v) in vehicles.iter().enumerate() {
            let (order, w) = dispatch_weight(v.pos, a, b.as_ref());
            g.push(i, left + j, w, order);
        }
    }
    g
}

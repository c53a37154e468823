//! Two-phase approximation: pair requests by a minimum-cost perfect
//! matching, then assign the resulting rides to vehicles by a minimum-cost
//! bipartite matching.

use thiserror::Error;

use super::mwm_max_cardinality;
use crate::geo::{manhattan_distance, path_length, StopOrder};
use crate::matchgraph::{make_ride, GraphKind, MatchGraph};
use crate::model::{Request, Ride, RideId, Trip, Vehicle, VehicleId};

#[derive(Debug, Error, PartialEq)]
pub enum ApprError {
    #[error("{vehicles} vehicles cannot serve {rides} rides")]
    InsufficientVehicles { rides: usize, vehicles: usize },
}

/// Cost of a pair when the worse of the two possible first pickups is used.
pub fn pair_cost(a: &Trip, b: &Trip) -> f64 {
    let from = |orders: [StopOrder; 2]| {
        orders
            .iter()
            .map(|o| path_length(&o.points(a, b)))
            .fold(f64::INFINITY, f64::min)
    };
    let s1_first = from([StopOrder::S1S2D1D2, StopOrder::S1S2D2D1]);
    let s2_first = from([StopOrder::S2S1D1D2, StopOrder::S2S1D2D1]);
    s1_first.max(s2_first)
}

/// Distance from a vehicle to the nearer pickup of a ride.
pub fn approach_cost(pos: crate::model::GeoPoint, a: &Trip, b: Option<&Trip>) -> f64 {
    let d = manhattan_distance(pos, a.src);
    b.map_or(d, |b| d.min(manhattan_distance(pos, b.src)))
}

/// Minimum-cost pairing of all trips. With an odd count one trip is left
/// alone (paired with a virtual partner whose cost is the trip length).
/// Returns `(i, Some(j))` for pairs and `(i, None)` for the single.
pub fn appr_pairing(trips: &[Trip]) -> Vec<(usize, Option<usize>)> {
    let n = trips.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![(0, None)];
    }
    let dummy = (n % 2 == 1).then_some(n);
    let nodes = n + usize::from(dummy.is_some());
    let mut costs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            costs.push((i, j, pair_cost(&trips[i], &trips[j])));
        }
        if let Some(d) = dummy {
            costs.push((i, d, manhattan_distance(trips[i].src, trips[i].dst)));
        }
    }
    let m = min_cost_max_cardinality(GraphKind::General, nodes, &costs);
    m.into_iter()
        .map(|(u, v)| match dummy {
            Some(d) if v == d => (u, None),
            _ => (u, Some(v)),
        })
        .collect()
}

/// Minimum-cost assignment of as many rides as possible to vehicles.
/// Returns `(ride index, vehicle index)` pairs.
pub fn appr_dispatch(rides: &[(Trip, Option<Trip>)], vehicles: &[Vehicle]) -> Vec<(usize, usize)> {
    let left = rides.len();
    if left == 0 || vehicles.is_empty() {
        return Vec::new();
    }
    let mut costs = Vec::with_capacity(left * vehicles.len());
    for (i, (a, b)) in rides.iter().enumerate() {
        for (j, v) in vehicles.iter().enumerate() {
            costs.push((i, left + j, approach_cost(v.pos, a, b.as_ref())));
        }
    }
    min_cost_max_cardinality(GraphKind::Bipartite { left }, left + vehicles.len(), &costs)
        .into_iter()
        .map(|(u, v)| (u, v - left))
        .collect()
}

/// Full two-phase assignment. Rides are numbered from 0 in output order.
pub fn appr_assign(requests: &[Request], vehicles: &[Vehicle]) -> Result<Vec<(Ride, VehicleId)>, ApprError> {
    let rides_needed = requests.len().div_ceil(2);
    if vehicles.len() < rides_needed {
        return Err(ApprError::InsufficientVehicles {
            rides: rides_needed,
            vehicles: vehicles.len(),
        });
    }
    let trips: Vec<Trip> = requests.iter().map(Request::trip).collect();
    let pairing = appr_pairing(&trips);
    let ride_trips: Vec<(Trip, Option<Trip>)> = pairing.iter().map(|&(i, j)| (trips[i], j.map(|j| trips[j]))).collect();
    let mut out = Vec::with_capacity(pairing.len());
    for (k, (ri, vi)) in appr_dispatch(&ride_trips, vehicles).into_iter().enumerate() {
        let (i, j) = pairing[ri];
        let mut ride = make_ride(
            RideId(k as u32),
            (requests[i].id, trips[i]),
            j.map(|j| (requests[j].id, trips[j])),
        );
        ride.assigned_vehicle = Some(vehicles[vi].id);
        out.push((ride, vehicles[vi].id));
    }
    Ok(out)
}

/// Minimum total cost among maximum-cardinality matchings, via blossom on
/// shifted weights `C - cost`.
fn min_cost_max_cardinality(kind: GraphKind, nodes: usize, costs: &[(usize, usize, f64)]) -> Vec<(usize, usize)> {
    let c = costs.iter().map(|e| e.2).fold(0.0, f64::max) + 1.0;
    let mut g = MatchGraph::new(kind, nodes);
    for &(u, v, cost) in costs {
        g.push(u, v, c - cost, StopOrder::Single);
    }
    mwm_max_cardinality(&g).pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::shared_route_from;
    use crate::model::{GeoPoint, RequestId, SimTime};
    use proptest::prelude::*;

    fn req(id: u32, src: GeoPoint, dst: GeoPoint) -> Request {
        Request::new(RequestId(id), SimTime(0), src, dst, 1)
    }

    fn serve_cost(vehicle: GeoPoint, a: &Trip, b: Option<&Trip>) -> f64 {
        shared_route_from(vehicle, a, b).1
    }

    /// Cheapest total over every split into pairs (plus one single when odd)
    /// and every injective assignment of rides to vehicles.
    fn brute_force(trips: &[Trip], vehicles: &[GeoPoint]) -> f64 {
        fn pairings(items: &[usize]) -> Vec<Vec<(usize, Option<usize>)>> {
            let Some((&first, rest)) = items.split_first() else {
                return vec![Vec::new()];
            };
            let mut out = Vec::new();
            if items.len() % 2 == 1 {
                for mut p in pairings(rest) {
                    if p.iter().all(|x| x.1.is_some()) {
                        p.push((first, None));
                        out.push(p);
                    }
                }
            }
            for (k, &other) in rest.iter().enumerate() {
                let mut remaining = rest.to_vec();
                remaining.remove(k);
                for mut p in pairings(&remaining) {
                    p.push((first, Some(other)));
                    out.push(p);
                }
            }
            out
        }
        fn assign(rides: &[(Trip, Option<Trip>)], vehicles: &[GeoPoint], used: &mut Vec<bool>) -> f64 {
            let Some(((a, b), rest)) = rides.split_first() else { return 0.0 };
            let mut best = f64::INFINITY;
            for v in 0..vehicles.len() {
                if !used[v] {
                    used[v] = true;
                    let c = serve_cost(vehicles[v], a, b.as_ref()) + assign(rest, vehicles, used);
                    best = best.min(c);
                    used[v] = false;
                }
            }
            best
        }
        let idx: Vec<usize> = (0..trips.len()).collect();
        pairings(&idx)
            .into_iter()
            .map(|p| {
                let rides: Vec<_> = p.iter().map(|&(i, j)| (trips[i], j.map(|j| trips[j]))).collect();
                assign(&rides, vehicles, &mut vec![false; vehicles.len()])
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint { lat, lon }
    }

    #[test]
    fn co_located_pair() {
        let (s, d) = (p(40.75, -73.98), p(40.76, -73.98));
        let reqs = [req(0, s, d), req(1, s, d)];
        let veh = [Vehicle::new(VehicleId(4), s, 0.0)];
        let out = appr_assign(&reqs, &veh).unwrap();
        assert_eq!(out.len(), 1);
        let (ride, v) = &out[0];
        assert_eq!(*v, VehicleId(4));
        assert!(!ride.is_single());
        let total = serve_cost(s, &ride.trips[0], Some(&ride.trips[1]));
        assert!((total - manhattan_distance(s, d)).abs() < 1e-9);
    }

    #[test]
    fn odd_count_leaves_one_single() {
        let reqs: Vec<Request> = (0..3)
            .map(|i| req(i, p(40.75 + 0.001 * f64::from(i), -73.98), p(40.77, -73.97)))
            .collect();
        let veh: Vec<Vehicle> = (0..2).map(|i| Vehicle::new(VehicleId(i), p(40.74, -73.99), 0.0)).collect();
        let out = appr_assign(&reqs, &veh).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out.iter().filter(|(r, _)| r.is_single()).count(), 1);
        let mut served: Vec<u32> = out.iter().flat_map(|(r, _)| r.requests()).map(|r| r.0).collect();
        served.sort_unstable();
        assert_eq!(served, vec![0, 1, 2]);
    }

    #[test]
    fn too_few_vehicles() {
        let reqs: Vec<Request> = (0..3).map(|i| req(i, p(40.75, -73.98), p(40.76, -73.98))).collect();
        let veh = [Vehicle::new(VehicleId(0), p(40.75, -73.98), 0.0)];
        assert_eq!(
            appr_assign(&reqs, &veh),
            Err(ApprError::InsufficientVehicles { rides: 2, vehicles: 1 })
        );
    }

    #[test]
    fn pair_cost_uses_worse_start() {
        // collinear: s1=0, s2=100, d1=400, d2=500 along a meridian
        let m = |x: f64| p(40.0 + (x / crate::geo::EARTH_RADIUS_M).to_degrees(), -73.9);
        let a = Trip { src: m(0.0), dst: m(400.0) };
        let b = Trip { src: m(100.0), dst: m(500.0) };
        // from s1 the best is 500; from s2 the best is 100+400+100 = 600
        assert!((pair_cost(&a, &b) - 600.0).abs() < 1e-6);
    }

    fn point() -> impl Strategy<Value = GeoPoint> {
        (40.70f64..40.80, -74.00f64..-73.90).prop_map(|(lat, lon)| p(lat, lon))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn within_two_and_a_half_of_optimum(
            n in 2usize..=5,
            extra in 0usize..=1,
            pts in proptest::collection::vec(point(), 16),
        ) {
            let reqs: Vec<Request> = (0..n).map(|i| req(i as u32, pts[2 * i], pts[2 * i + 1])).collect();
            let nv = n.div_ceil(2) + extra;
            let veh: Vec<Vehicle> = (0..nv).map(|i| Vehicle::new(VehicleId(i as u32), pts[10 + i], 0.0)).collect();
            let out = appr_assign(&reqs, &veh).unwrap();
            let total: f64 = out
                .iter()
                .map(|(r, v)| {
                    let pos = veh[v.index()].pos;
                    serve_cost(pos, &r.trips[0], (!r.is_single()).then_some(&r.trips[1]))
                })
                .sum();
            let trips: Vec<Trip> = reqs.iter().map(Request::trip).collect();
            let opt = brute_force(&trips, &veh.iter().map(|v| v.pos).collect::<Vec<_>>());
            prop_assert!(total <= 2.5 * opt + 1e-6, "total {total} opt {opt}");
        }
    }
}

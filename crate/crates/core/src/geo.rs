//! Distances and two-passenger route optimization over geo-points.

use crate::model::{GeoPoint, RequestId, Stop, StopKind, Trip};
use serde::{Deserialize, Serialize};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Equirectangular Manhattan distance in meters, with the longitude leg
/// scaled by the cosine of the mean latitude.
pub fn manhattan_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let dphi = (a.lat - b.lat).abs().to_radians();
    let dlambda = (a.lon - b.lon).abs().to_radians();
    let mean = ((a.lat + b.lat) / 2.0).to_radians();
    EARTH_RADIUS_M * dphi + EARTH_RADIUS_M * dlambda * mean.cos()
}

/// Total length of a polyline through `points`.
pub fn path_length(points: &[GeoPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| manhattan_distance(w[0], w[1]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopLabel {
    S1,
    S2,
    D1,
    D2,
}

/// Visiting order for a ride. Shared orders always interleave the two
/// passengers: both pickups precede both dropoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopOrder {
    Single,
    S1S2D1D2,
    S1S2D2D1,
    S2S1D1D2,
    S2S1D2D1,
}

impl StopOrder {
    pub const SHARED: [StopOrder; 4] = [
        StopOrder::S1S2D1D2,
        StopOrder::S1S2D2D1,
        StopOrder::S2S1D1D2,
        StopOrder::S2S1D2D1,
    ];

    pub fn labels(self) -> &'static [StopLabel] {
        use StopLabel::*;
        match self {
            StopOrder::Single => &[S1, D1],
            StopOrder::S1S2D1D2 => &[S1, S2, D1, D2],
            StopOrder::S1S2D2D1 => &[S1, S2, D2, D1],
            StopOrder::S2S1D1D2 => &[S2, S1, D1, D2],
            StopOrder::S2S1D2D1 => &[S2, S1, D2, D1],
        }
    }

    pub fn is_shared(self) -> bool {
        self != StopOrder::Single
    }

    /// The same order with the roles of the two passengers exchanged.
    pub fn swapped(self) -> StopOrder {
        match self {
            StopOrder::Single => StopOrder::Single,
            StopOrder::S1S2D1D2 => StopOrder::S2S1D2D1,
            StopOrder::S1S2D2D1 => StopOrder::S2S1D1D2,
            StopOrder::S2S1D1D2 => StopOrder::S1S2D2D1,
            StopOrder::S2S1D2D1 => StopOrder::S1S2D1D2,
        }
    }

    /// Geo-points of the stops for passengers `a` (1) and `b` (2).
    pub fn points(self, a: &Trip, b: &Trip) -> Vec<GeoPoint> {
        self.labels()
            .iter()
            .map(|label| label_point(*label, a, b))
            .collect()
    }

    /// Concrete itinerary stops for requests `ra` (trip `a`) and `rb` (trip `b`).
    pub fn stops(self, ra: RequestId, a: &Trip, rb: RequestId, b: &Trip) -> Vec<Stop> {
        self.labels()
            .iter()
            .map(|label| {
                let (request, kind) = match label {
                    StopLabel::S1 => (ra, StopKind::Pickup),
                    StopLabel::D1 => (ra, StopKind::Dropoff),
                    StopLabel::S2 => (rb, StopKind::Pickup),
                    StopLabel::D2 => (rb, StopKind::Dropoff),
                };
                Stop {
                    request,
                    kind,
                    point: label_point(*label, a, b),
                }
            })
            .collect()
    }
}

fn label_point(label: StopLabel, a: &Trip, b: &Trip) -> GeoPoint {
    match label {
        StopLabel::S1 => a.src,
        StopLabel::D1 => a.dst,
        StopLabel::S2 => b.src,
        StopLabel::D2 => b.dst,
    }
}

fn best_order(mut cost: impl FnMut(StopOrder) -> f64) -> (StopOrder, f64) {
    let mut best = (StopOrder::SHARED[0], cost(StopOrder::SHARED[0]));
    for order in &StopOrder::SHARED[1..] {
        let c = cost(*order);
        if c < best.1 {
            best = (*order, c);
        }
    }
    best
}

/// Shortest interleaved route serving both trips, starting at whichever
/// pickup the order visits first.
pub fn shared_route(a: &Trip, b: &Trip) -> (StopOrder, f64) {
    best_order(|order| path_length(&order.points(a, b)))
}

/// Shortest route serving the ride from a vehicle at `v`; `b = None` is a
/// single ride.
pub fn shared_route_from(v: GeoPoint, a: &Trip, b: Option<&Trip>) -> (StopOrder, f64) {
    match b {
        None => (
            StopOrder::Single,
            manhattan_distance(v, a.src) + manhattan_distance(a.src, a.dst),
        ),
        Some(b) => best_order(|order| {
            let points = order.points(a, b);
            manhattan_distance(v, points[0]) + path_length(&points)
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Passenger {
    First,
    Second,
}

/// Distance driven between a passenger's pickup and dropoff under `order`.
pub fn conditional_leg(order: StopOrder, a: &Trip, b: &Trip, which: Passenger) -> f64 {
    if order == StopOrder::Single {
        return manhattan_distance(a.src, a.dst);
    }
    let (pickup, dropoff) = match which {
        Passenger::First => (StopLabel::S1, StopLabel::D1),
        Passenger::Second => (StopLabel::S2, StopLabel::D2),
    };
    let labels = order.labels();
    let points = order.points(a, b);
    let start = labels.iter().position(|l| *l == pickup).unwrap();
    let end = labels.iter().position(|l| *l == dropoff).unwrap();
    path_length(&points[start..=end])
}

/// Moves from `from` toward `to` along the L-shaped path (latitude leg
/// first), consuming `budget` meters. Returns `to` once the budget covers
/// the full distance.
pub fn move_along(from: GeoPoint, to: GeoPoint, budget: f64) -> GeoPoint {
    let budget = budget.max(0.0);
    if budget >= manhattan_distance(from, to) {
        return to;
    }
    let lat_leg = EARTH_RADIUS_M * (to.lat - from.lat).abs().to_radians();
    if budget <= lat_leg {
        let dlat = (budget / EARTH_RADIUS_M).to_degrees() * (to.lat - from.lat).signum();
        return GeoPoint {
            lat: from.lat + dlat,
            lon: from.lon,
        };
    }
    // longitude leg runs along the destination parallel
    let rest = budget - lat_leg;
    let scale = EARTH_RADIUS_M * to.lat.to_radians().cos();
    let full = (to.lon - from.lon).abs();
    let dlon = if scale > 0.0 {
        (rest / scale).to_degrees().min(full)
    } else {
        full
    };
    GeoPoint {
        lat: to.lat,
        lon: from.lon + dlon * (to.lon - from.lon).signum(),
    }
}

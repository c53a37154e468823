//! Ride pricing and the per-run metrics report.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::engine::log::{EventKind, EventLog};
use crate::geo::{conditional_leg, manhattan_distance, path_length, Passenger, StopLabel, StopOrder};
use crate::model::{GeoPoint, Ride, RequestId, SimParams, Stamp, Trip, Vehicle, VehicleId};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("request {0} never completed")]
    IncompleteLog(RequestId),
    #[error("event log is inconsistent: {0}")]
    Inconsistent(String),
}

/// Fare charged to the passengers of a ride, before fuel cost.
pub fn ride_fare(ride: &Ride, order: StopOrder, params: &SimParams) -> f64 {
    let [a, b] = &ride.trips;
    if ride.is_single() {
        params.beta_usd + params.pi_single_usd_per_km * manhattan_distance(a.src, a.dst) / 1000.0
    } else {
        let legs = conditional_leg(order, a, b, Passenger::First) + conditional_leg(order, a, b, Passenger::Second);
        2.0 * params.beta_usd + params.pi_shared_usd_per_km * legs / 1000.0
    }
}

/// Meters driven serving the ride in `order` from `v_start`.
pub fn ride_route_m(ride: &Ride, order: StopOrder, v_start: GeoPoint) -> f64 {
    let [a, b] = &ride.trips;
    let points = order.points(a, b);
    manhattan_distance(v_start, points[0]) + path_length(&points)
}

/// Driver revenue of a ride: fares minus the fuel cost of the whole route
/// from the vehicle's position.
pub fn ride_revenue(ride: &Ride, order: StopOrder, v_start: GeoPoint, params: &SimParams) -> f64 {
    ride_fare(ride, order, params) - params.cost_usd_per_km * ride_route_m(ride, order, v_start) / 1000.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Population mean and standard deviation; zeros for no samples.
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return MeanSd::default();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        MeanSd { mean, sd: var.sqrt() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ElapsedNs {
    pub pairing: u64,
    pub dispatch: u64,
    pub relocation: u64,
    pub total: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub requests: usize,
    pub vehicles: usize,
    pub distance_driven_m: f64,
    pub elapsed_ns: ElapsedNs,
    pub time_to_pair_s: MeanSd,
    pub time_to_pair_taxi_s: MeanSd,
    pub time_to_pickup_s: MeanSd,
    pub delay_s: MeanSd,
    pub cumulative_delay_s: f64,
    pub driver_profit_usd: Spread,
    pub driver_profit_sd: f64,
    pub platform_profit_usd: f64,
    pub shared_ride_count: usize,
    pub frictions_s: MeanSd,
}

/// Column names of [`MetricsReport::csv_row`].
pub const CSV_HEADER: [&str; 21] = [
    "requests",
    "vehicles",
    "distance_driven_m",
    "elapsed_ns",
    "time_to_pair_s",
    "time_to_pair_s_sd",
    "time_to_pair_taxi_s",
    "time_to_pair_taxi_s_sd",
    "time_to_pickup_s",
    "time_to_pickup_s_sd",
    "delay_s",
    "delay_s_sd",
    "cumulative_delay_s",
    "driver_profit_usd",
    "driver_profit_sd",
    "driver_profit_max",
    "driver_profit_min",
    "platform_profit_usd",
    "shared_rides",
    "frictions_s",
    "frictions_s_sd",
];

impl MetricsReport {
    pub fn csv_row(&self) -> Vec<f64> {
        vec![
            self.requests as f64,
            self.vehicles as f64,
            self.distance_driven_m,
            self.elapsed_ns.total as f64,
            self.time_to_pair_s.mean,
            self.time_to_pair_s.sd,
            self.time_to_pair_taxi_s.mean,
            self.time_to_pair_taxi_s.sd,
            self.time_to_pickup_s.mean,
            self.time_to_pickup_s.sd,
            self.delay_s.mean,
            self.delay_s.sd,
            self.cumulative_delay_s,
            self.driver_profit_usd.mean,
            self.driver_profit_sd,
            self.driver_profit_usd.max,
            self.driver_profit_usd.min,
            self.platform_profit_usd,
            self.shared_ride_count as f64,
            self.frictions_s.mean,
            self.frictions_s.sd,
        ]
    }
}

#[derive(Default, Clone)]
struct Timeline {
    open: Option<(Stamp, Trip)>,
    paired: Option<(Stamp, RequestId)>,
    taxi: Option<(Stamp, VehicleId, GeoPoint)>,
    pickup: Option<Stamp>,
    dest: Option<Stamp>,
}

/// One completed ride reconstructed from the log.
pub struct LoggedRide {
    pub ride: Ride,
    pub order: StopOrder,
    pub vehicle: VehicleId,
    pub v_start: GeoPoint,
}

fn order_from_labels(labels: &[StopLabel]) -> Option<StopOrder> {
    std::iter::once(StopOrder::Single)
        .chain(StopOrder::SHARED)
        .find(|o| o.labels() == labels)
}

/// Rides in assignment order, rebuilt from pairing, assignment and stop
/// events.
pub fn logged_rides(log: &EventLog) -> Result<Vec<LoggedRide>, MetricsError> {
    let mut trips: BTreeMap<RequestId, Trip> = BTreeMap::new();
    let mut partner: BTreeMap<RequestId, RequestId> = BTreeMap::new();
    let mut stops: BTreeMap<RequestId, Vec<(RequestId, bool)>> = BTreeMap::new();
    let mut assigned: Vec<(RequestId, VehicleId, GeoPoint)> = Vec::new();
    let mut head: BTreeMap<RequestId, RequestId> = BTreeMap::new();
    for e in &log.events {
        match e.kind {
            EventKind::Open { request, src, dst, .. } => {
                trips.insert(request, Trip { src, dst });
            }
            EventKind::Paired { request, partner: p } => {
                partner.insert(request, p);
                // the first of the two to be logged leads the ride
                let lead = *head.entry(p).or_insert(request);
                head.insert(request, lead);
            }
            EventKind::TaxiAssigned { request, vehicle, from } => {
                if head.get(&request) == Some(&request) {
                    assigned.push((request, vehicle, from));
                }
            }
            EventKind::Pickup { request, .. } | EventKind::Dropoff { request, .. } => {
                let lead = *head
                    .get(&request)
                    .ok_or_else(|| MetricsError::Inconsistent(format!("stop before pairing for {request}")))?;
                let is_pickup = matches!(e.kind, EventKind::Pickup { .. });
                stops.entry(lead).or_default().push((request, is_pickup));
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    for (r1, vehicle, v_start) in assigned {
        let r2 = partner[&r1];
        let t1 = *trips.get(&r1).ok_or(MetricsError::IncompleteLog(r1))?;
        let t2 = *trips.get(&r2).ok_or(MetricsError::IncompleteLog(r2))?;
        let seq = stops.get(&r1).cloned().unwrap_or_default();
        let labels: Vec<StopLabel> = seq
            .iter()
            .map(|&(r, pick)| match (r == r1, pick) {
                (true, true) => StopLabel::S1,
                (true, false) => StopLabel::D1,
                (false, true) => StopLabel::S2,
                (false, false) => StopLabel::D2,
            })
            .collect();
        let order = order_from_labels(&labels).ok_or_else(|| {
            if labels.len() < if r1 == r2 { 2 } else { 4 } {
                MetricsError::IncompleteLog(r1)
            } else {
                MetricsError::Inconsistent(format!("stop sequence {labels:?} for ride of {r1}"))
            }
        })?;
        let ride = crate::matchgraph::make_ride(
            crate::model::RideId(out.len() as u32),
            (r1, t1),
            (r1 != r2).then_some((r2, t2)),
        );
        out.push(LoggedRide {
            ride,
            order,
            vehicle,
            v_start,
        });
    }
    Ok(out)
}

/// Builds the report from a complete event log.
pub fn finalize(log: &EventLog, fleet: &[Vehicle], params: &SimParams) -> Result<MetricsReport, MetricsError> {
    let mut lines: BTreeMap<RequestId, Timeline> = BTreeMap::new();
    let mut distance = 0.0;
    let mut frictions = Vec::new();
    let mut last_drop: BTreeMap<VehicleId, Stamp> = BTreeMap::new();
    let mut last_assign: BTreeMap<VehicleId, Stamp> = BTreeMap::new();
    for e in &log.events {
        match e.kind {
            EventKind::Open { request, src, dst, .. } => {
                lines.entry(request).or_default().open = Some((e.t, Trip { src, dst }));
            }
            EventKind::Paired { request, partner } => lines.entry(request).or_default().paired = Some((e.t, partner)),
            EventKind::TaxiAssigned { request, vehicle, from } => {
                lines.entry(request).or_default().taxi = Some((e.t, vehicle, from));
                // both passengers of a ride are assigned in the same instant
                if last_assign.get(&vehicle) != Some(&e.t) {
                    if let Some(d) = last_drop.remove(&vehicle) {
                        frictions.push((e.t - d) * 60.0);
                    }
                    last_assign.insert(vehicle, e.t);
                }
            }
            EventKind::Pickup { request, .. } => lines.entry(request).or_default().pickup = Some(e.t),
            EventKind::Dropoff { request, vehicle, .. } => {
                lines.entry(request).or_default().dest = Some(e.t);
                last_drop.insert(vehicle, e.t);
            }
            EventKind::Segment { meters, .. } => distance += meters,
            EventKind::Critical { .. } | EventKind::RelocationStart { .. } => {}
        }
    }

    let mut pair = Vec::new();
    let mut taxi = Vec::new();
    let mut pickup = Vec::new();
    let mut delay = Vec::new();
    for (&id, l) in &lines {
        let (Some((t0, trip)), Some((tp, _)), Some((tt, _, _)), Some(tu), Some(td)) = (l.open, l.paired, l.taxi, l.pickup, l.dest)
        else {
            return Err(MetricsError::IncompleteLog(id));
        };
        pair.push((tp - t0) * 60.0);
        taxi.push((tt - tp) * 60.0);
        pickup.push((tu - tt) * 60.0);
        delay.push((td - tu) * 60.0 - manhattan_distance(trip.src, trip.dst) / params.speed_mps);
    }

    let rides = logged_rides(log)?;
    let mut earned: BTreeMap<VehicleId, f64> = fleet.iter().map(|v| (v.id, 0.0)).collect();
    let mut fares = 0.0;
    let mut shared = 0;
    for r in &rides {
        fares += ride_fare(&r.ride, r.order, params);
        *earned.entry(r.vehicle).or_default() += ride_revenue(&r.ride, r.order, r.v_start, params);
        shared += usize::from(!r.ride.is_single());
    }
    let profits: Vec<f64> = earned.values().copied().collect();
    let spread = if profits.is_empty() {
        Spread::default()
    } else {
        Spread {
            mean: profits.iter().sum::<f64>() / profits.len() as f64,
            max: profits.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: profits.iter().copied().fold(f64::INFINITY, f64::min),
        }
    };

    let (pair, taxi, pickup, delay) = (MeanSd::of(&pair), MeanSd::of(&taxi), MeanSd::of(&pickup), MeanSd::of(&delay));
    let el = &log.elapsed;
    Ok(MetricsReport {
        requests: lines.len(),
        vehicles: fleet.len(),
        distance_driven_m: distance,
        elapsed_ns: ElapsedNs {
            pairing: el.pairing_ns,
            dispatch: el.dispatch_ns,
            relocation: el.relocation_ns,
            total: el.total_ns(),
        },
        time_to_pair_s: pair,
        time_to_pair_taxi_s: taxi,
        time_to_pickup_s: pickup,
        delay_s: delay,
        cumulative_delay_s: pair.mean + taxi.mean + pickup.mean + delay.mean,
        driver_profit_usd: spread,
        driver_profit_sd: MeanSd::of(&profits).sd,
        platform_profit_usd: params.commission * fares,
        shared_ride_count: shared,
        frictions_s: MeanSd::of(&frictions),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::EARTH_RADIUS_M;
    use crate::matchgraph::make_ride;
    use crate::model::RideId;

    fn north(m: f64) -> GeoPoint {
        GeoPoint {
            lat: 40.0 + (m / EARTH_RADIUS_M).to_degrees(),
            lon: -73.9,
        }
    }

    fn single(src: f64, dst: f64) -> Ride {
        make_ride(
            RideId(0),
            (
                RequestId(0),
                Trip {
                    src: north(src),
                    dst: north(dst),
                },
            ),
            None,
        )
    }

    fn round4(x: f64) -> f64 {
        (x * 1e4).round() / 1e4
    }

    #[test]
    fn single_revenue_example() {
        // 1 km trip, vehicle 500 m before the pickup
        let ride = single(500.0, 1500.0);
        let r = ride_revenue(&ride, StopOrder::Single, north(0.0), &SimParams::default());
        assert_eq!(round4(r), 3.0911);
    }

    #[test]
    fn shared_revenue_example() {
        // s1=0, s2=800, d1=1000, d2=2000: legs 1.0 and 1.2 km, route 2.0 km
        let a = Trip {
            src: north(0.0),
            dst: north(1000.0),
        };
        let b = Trip {
            src: north(800.0),
            dst: north(2000.0),
        };
        let ride = make_ride(RideId(0), (RequestId(0), a), Some((RequestId(1), b)));
        let order = StopOrder::S1S2D1D2;
        assert!((conditional_leg(order, &a, &b, Passenger::First) - 1000.0).abs() < 1e-6);
        assert!((conditional_leg(order, &a, &b, Passenger::Second) - 1200.0).abs() < 1e-6);
        let r = ride_revenue(&ride, order, north(0.0), &SimParams::default());
        assert_eq!(round4(r), 6.0228);
    }

    #[test]
    fn degenerate_single_is_base_fare() {
        let ride = single(0.0, 0.0);
        let r = ride_revenue(&ride, StopOrder::Single, north(0.0), &SimParams::default());
        assert_eq!(r, 2.2);
    }

    #[test]
    fn population_sd() {
        let s = MeanSd::of(&[1.0, 3.0]);
        assert_eq!(s, MeanSd { mean: 2.0, sd: 1.0 });
        assert_eq!(MeanSd::of(&[]), MeanSd::default());
    }

    fn open(log: &mut EventLog, t: f64, id: u32, s: f64, d: f64) {
        log.push(
            t,
            EventKind::Open {
                request: RequestId(id),
                src: north(s),
                dst: north(d),
                k_wait: 1,
            },
        );
    }

    #[test]
    fn incomplete_log_is_rejected() {
        let mut log = EventLog::default();
        open(&mut log, 0.0, 0, 0.0, 100.0);
        assert_eq!(finalize(&log, &[], &SimParams::default()), Err(MetricsError::IncompleteLog(RequestId(0))));
    }

    /// Two vehicles: v0 serves r0 alone; v1 serves r1 and r2 shared, then
    /// waits before serving r3.
    #[test]
    fn toy_log_matches_hand_accounting() {
        let p = SimParams::default();
        let mpm = p.meters_per_minute(); // 372 m per minute
        let mut log = EventLog::default();
        let (v0, v1) = (VehicleId(0), VehicleId(1));
        let seg = |log: &mut EventLog, t: f64, v: VehicleId, a: f64, b: f64| {
            log.push(
                t,
                EventKind::Segment {
                    vehicle: v,
                    from: north(a),
                    to: north(b),
                    meters: (b - a).abs(),
                },
            )
        };
        open(&mut log, 0.0, 0, 0.0, 744.0);
        open(&mut log, 0.0, 1, 1000.0, 1744.0);
        open(&mut log, 0.0, 2, 1000.0, 1744.0);
        log.push(1.0, EventKind::Paired { request: RequestId(0), partner: RequestId(0) });
        log.push(2.0, EventKind::Paired { request: RequestId(1), partner: RequestId(2) });
        log.push(2.0, EventKind::Paired { request: RequestId(2), partner: RequestId(1) });
        log.push(2.0, EventKind::TaxiAssigned { request: RequestId(0), vehicle: v0, from: north(0.0) });
        log.push(2.0, EventKind::TaxiAssigned { request: RequestId(1), vehicle: v1, from: north(1000.0) });
        log.push(2.0, EventKind::TaxiAssigned { request: RequestId(2), vehicle: v1, from: north(1000.0) });
        log.push(2.0, EventKind::Pickup { request: RequestId(0), vehicle: v0, at: north(0.0) });
        log.push(2.0, EventKind::Pickup { request: RequestId(1), vehicle: v1, at: north(1000.0) });
        log.push(2.0, EventKind::Pickup { request: RequestId(2), vehicle: v1, at: north(1000.0) });
        seg(&mut log, 4.0, v0, 0.0, 744.0);
        log.push(4.0, EventKind::Dropoff { request: RequestId(0), vehicle: v0, at: north(744.0) });
        seg(&mut log, 4.0, v1, 1000.0, 1744.0);
        log.push(4.0, EventKind::Dropoff { request: RequestId(1), vehicle: v1, at: north(1744.0) });
        log.push(4.0, EventKind::Dropoff { request: RequestId(2), vehicle: v1, at: north(1744.0) });
        open(&mut log, 5.0, 3, 1744.0, 1744.0 + mpm);
        log.push(5.0, EventKind::Paired { request: RequestId(3), partner: RequestId(3) });
        log.push(6.0, EventKind::TaxiAssigned { request: RequestId(3), vehicle: v1, from: north(1744.0) });
        log.push(6.0, EventKind::Pickup { request: RequestId(3), vehicle: v1, at: north(1744.0) });
        seg(&mut log, 7.0, v1, 1744.0, 1744.0 + mpm);
        log.push(7.0, EventKind::Dropoff { request: RequestId(3), vehicle: v1, at: north(1744.0 + mpm) });

        let fleet = [Vehicle::new(v0, north(0.0), 0.0), Vehicle::new(v1, north(1000.0), 0.0)];
        let rep = finalize(&log, &fleet, &p).unwrap();
        assert_eq!(rep.requests, 4);
        assert!((rep.distance_driven_m - (744.0 + 744.0 + mpm)).abs() < 1e-9);
        // pair: 60, 120, 120, 0 s; taxi: 60, 0, 0, 60 s; pickup all 0
        assert!((rep.time_to_pair_s.mean - 75.0).abs() < 1e-9);
        assert!((rep.time_to_pair_taxi_s.mean - 30.0).abs() < 1e-9);
        assert_eq!(rep.time_to_pickup_s.mean, 0.0);
        // every trip took exactly its direct time
        assert!(rep.delay_s.mean.abs() < 1e-6);
        assert!((rep.cumulative_delay_s - 105.0).abs() < 1e-6);
        assert_eq!(rep.shared_ride_count, 1);
        // v1 waited from its dropoff at 4 until the match at 6
        assert_eq!(rep.frictions_s, MeanSd { mean: 120.0, sd: 0.0 });

        let km = |m: f64| m / 1000.0;
        let single_fare = |m: f64| p.beta_usd + p.pi_single_usd_per_km * km(m);
        let shared_fare = 2.0 * p.beta_usd + p.pi_shared_usd_per_km * km(2.0 * 744.0);
        let v0_rev = single_fare(744.0) - p.cost_usd_per_km * km(744.0);
        let v1_rev = shared_fare - p.cost_usd_per_km * km(744.0) + single_fare(mpm) - p.cost_usd_per_km * km(mpm);
        assert!((rep.driver_profit_usd.max - v1_rev).abs() < 1e-9);
        assert!((rep.driver_profit_usd.min - v0_rev).abs() < 1e-9);
        let fares = single_fare(744.0) + shared_fare + single_fare(mpm);
        assert!((rep.platform_profit_usd - 0.25 * fares).abs() < 1e-12);
    }
}

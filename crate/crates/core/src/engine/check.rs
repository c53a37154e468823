//! Run-level invariants and matcher cross-checks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::log::EventKind;
use super::RunOutput;
use crate::geo::{conditional_leg, manhattan_distance, Passenger};
use crate::matchgraph::{pairing_saving, MatchGraph};
use crate::matching::{alma, greedy, mwm, AlmaConfig};
use crate::metrics::logged_rides;
use crate::model::{RequestId, RequestState, SimParams, Stamp, VehicleId};

/// Comparison of MWM, ALMA and Greedy on every matching graph of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatcherAudit {
    pub graphs: usize,
    pub mwm_total: f64,
    pub alma_total: f64,
    pub greedy_total: f64,
    pub violations: Vec<String>,
}

impl MatcherAudit {
    pub fn record(&mut self, g: &MatchGraph, seed: u64) {
        let m = mwm(g).total_weight;
        let a = alma(g, AlmaConfig::default().max_rounds, seed).total_weight;
        let gr = greedy(g, seed).total_weight;
        self.graphs += 1;
        self.mwm_total += m;
        self.alma_total += a;
        self.greedy_total += gr;
        let tol = 1e-9 * m.abs().max(1.0);
        for (name, w) in [("ALMA", a), ("Greedy", gr)] {
            if w > m + tol || w < -tol {
                self.violations
                    .push(format!("graph {} ({} nodes): MWM {m} vs {name} {w}", self.graphs, g.node_count));
            }
        }
    }
}

/// Violated run invariants, empty when the run is consistent: every request
/// delivered, time never runs backwards, taxis carry one ride at a time and
/// the logged distance matches the odometers.
pub fn check_run(out: &RunOutput) -> Vec<String> {
    let mut bad = Vec::new();
    for r in &out.requests {
        if r.state != RequestState::Completed {
            bad.push(format!("request {} ended {:?}", r.id, r.state));
            continue;
        }
        let stamps = [Some(r.t_open.stamp()), r.t_paired, r.t_taxi, r.t_pickup, r.t_dest];
        if stamps.windows(2).any(|w| w[0] > w[1]) {
            bad.push(format!("request {} has out-of-order stamps {stamps:?}", r.id));
        }
    }

    let mut last = f64::NEG_INFINITY;
    let mut dropped: BTreeSet<RequestId> = BTreeSet::new();
    // requests assigned but not yet delivered, and when they were assigned
    let mut carrying: BTreeMap<VehicleId, (Stamp, BTreeSet<RequestId>)> = BTreeMap::new();
    let mut aboard: BTreeMap<VehicleId, usize> = BTreeMap::new();
    let mut segments = 0.0;
    for e in &out.log.events {
        if e.t < last {
            bad.push(format!("event at {} logged after {last}", e.t));
        }
        last = e.t;
        match e.kind {
            EventKind::TaxiAssigned { request, vehicle, .. } => {
                let slot = carrying.entry(vehicle).or_insert((e.t, BTreeSet::new()));
                if !slot.1.is_empty() && slot.0 != e.t {
                    bad.push(format!("taxi {vehicle} assigned {request} while serving {:?}", slot.1));
                }
                slot.0 = e.t;
                slot.1.insert(request);
                if slot.1.len() > 2 {
                    bad.push(format!("taxi {vehicle} holds {} requests", slot.1.len()));
                }
            }
            EventKind::Pickup { vehicle, .. } => {
                let n = aboard.entry(vehicle).or_default();
                *n += 1;
                if *n > 2 {
                    bad.push(format!("taxi {vehicle} carries {n} passengers"));
                }
            }
            EventKind::Dropoff { request, vehicle, .. } => {
                *aboard.entry(vehicle).or_default() -= 1;
                if let Some(slot) = carrying.get_mut(&vehicle) {
                    slot.1.remove(&request);
                }
                dropped.insert(request);
            }
            EventKind::Segment { meters, .. } => segments += meters,
            _ => {}
        }
    }
    if dropped.len() != out.requests.len() {
        bad.push(format!("{} of {} requests dropped off", dropped.len(), out.requests.len()));
    }

    let odometers: f64 = out.fleet.iter().map(|v| v.odometer_m).sum();
    if (odometers - segments).abs() > 1e-6 * odometers.abs().max(1.0) {
        bad.push(format!("odometers {odometers} m but segments {segments} m"));
    }
    bad
}

/// Shared rides where a passenger pays at least the single-ride fare even
/// though pairing saves distance.
pub fn fare_violations(out: &RunOutput, params: &SimParams) -> Vec<String> {
    let rides = match logged_rides(&out.log) {
        Ok(r) => r,
        Err(e) => return vec![e.to_string()],
    };
    let mut bad = Vec::new();
    for r in rides.iter().filter(|r| !r.ride.is_single()) {
        let [a, b] = &r.ride.trips;
        if pairing_saving(a, b).1 <= 0.0 {
            continue;
        }
        for (who, trip) in [(Passenger::First, a), (Passenger::Second, b)] {
            let shared = params.beta_usd + params.pi_shared_usd_per_km * conditional_leg(r.order, a, b, who) / 1000.0;
            let single = params.beta_usd + params.pi_single_usd_per_km * manhattan_distance(trip.src, trip.dst) / 1000.0;
            if shared >= single {
                bad.push(format!(
                    "ride of {} and {} ({who:?}): shared fare {shared:.4} >= single fare {single:.4}",
                    r.ride.r1, r.ride.r2
                ));
            }
        }
    }
    bad
}

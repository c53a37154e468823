//! Append-only record of everything that happened in a run.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::model::{GeoPoint, RequestId, Stamp, VehicleId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Open {
        request: RequestId,
        src: GeoPoint,
        dst: GeoPoint,
        k_wait: u32,
    },
    Critical {
        request: RequestId,
    },
    /// `partner == request` for a single ride.
    Paired {
        request: RequestId,
        partner: RequestId,
    },
    TaxiAssigned {
        request: RequestId,
        vehicle: VehicleId,
        /// Vehicle position at assignment.
        from: GeoPoint,
    },
    Pickup {
        request: RequestId,
        vehicle: VehicleId,
        at: GeoPoint,
    },
    Dropoff {
        request: RequestId,
        vehicle: VehicleId,
        at: GeoPoint,
    },
    RelocationStart {
        vehicle: VehicleId,
        target: GeoPoint,
    },
    /// A finished (or interrupted) straight leg of vehicle motion.
    Segment {
        vehicle: VehicleId,
        from: GeoPoint,
        to: GeoPoint,
        meters: f64,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Open { .. } => "open",
            EventKind::Critical { .. } => "critical",
            EventKind::Paired { .. } => "paired",
            EventKind::TaxiAssigned { .. } => "taxi_assigned",
            EventKind::Pickup { .. } => "pickup",
            EventKind::Dropoff { .. } => "dropoff",
            EventKind::RelocationStart { .. } => "relocation_start",
            EventKind::Segment { .. } => "segment",
        }
    }

    pub fn request(&self) -> Option<RequestId> {
        match *self {
            EventKind::Open { request, .. }
            | EventKind::Critical { request }
            | EventKind::Paired { request, .. }
            | EventKind::TaxiAssigned { request, .. }
            | EventKind::Pickup { request, .. }
            | EventKind::Dropoff { request, .. } => Some(request),
            EventKind::RelocationStart { .. } | EventKind::Segment { .. } => None,
        }
    }

    pub fn vehicle(&self) -> Option<VehicleId> {
        match *self {
            EventKind::TaxiAssigned { vehicle, .. }
            | EventKind::Pickup { vehicle, .. }
            | EventKind::Dropoff { vehicle, .. }
            | EventKind::RelocationStart { vehicle, .. }
            | EventKind::Segment { vehicle, .. } => Some(vehicle),
            _ => None,
        }
    }

    fn point(&self) -> Option<GeoPoint> {
        match *self {
            EventKind::Open { src, .. } => Some(src),
            EventKind::TaxiAssigned { from, .. } => Some(from),
            EventKind::Pickup { at, .. } | EventKind::Dropoff { at, .. } => Some(at),
            EventKind::RelocationStart { target, .. } => Some(target),
            EventKind::Segment { to, .. } => Some(to),
            EventKind::Critical { .. } | EventKind::Paired { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Minutes since the epoch, fractional within a minute.
    pub t: Stamp,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Pairing,
    Dispatch,
    Relocation,
}

/// Wall-clock time spent inside each step's algorithm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Elapsed {
    pub pairing_ns: u64,
    pub dispatch_ns: u64,
    pub relocation_ns: u64,
    pub calls: [u64; 3],
}

impl Elapsed {
    pub fn add(&mut self, step: Step, ns: u64) {
        let slot = match step {
            Step::Pairing => &mut self.pairing_ns,
            Step::Dispatch => &mut self.dispatch_ns,
            Step::Relocation => &mut self.relocation_ns,
        };
        *slot += ns;
        self.calls[step as usize] += 1;
    }

    pub fn total_ns(&self) -> u64 {
        self.pairing_ns + self.dispatch_ns + self.relocation_ns
    }
}

/// Events in time order. Elapsed times are kept beside the events so two
/// runs of the same configuration produce identical event streams.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub elapsed: Elapsed,
}

impl EventLog {
    pub fn push(&mut self, t: Stamp, kind: EventKind) {
        debug_assert!(
            self.events.last().is_none_or(|e| e.t <= t + 1e-9),
            "event at {t} after {:?}",
            self.events.last()
        );
        self.events.push(Event { t, kind });
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// One line per event: `minute.fraction kind request vehicle lat lon`,
    /// with `-` for fields that do not apply.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let dash = || "-".to_string();
            let req = e.kind.request().map_or_else(dash, |r| r.to_string());
            let veh = e.kind.vehicle().map_or_else(dash, |v| v.to_string());
            let pos = e.kind.point().map_or_else(|| "- -".to_string(), |p| p.to_string());
            let _ = writeln!(out, "{:.6} {} {} {} {}", e.t, e.kind.name(), req, veh, pos);
        }
        out
    }
}

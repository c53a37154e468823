//! Shared domain types and the request lifecycle.
//!
//! Simulation time is kept at two resolutions. [`SimTime`] counts whole
//! minutes and drives algorithm scheduling; event stamps are `f64` minutes
//! so pickups and dropoffs can land inside a minute.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Event timestamp in (fractional) minutes since the simulation epoch.
pub type Stamp = f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid geo-point ({lat}, {lon})")]
    InvalidGeoPoint { lat: f64, lon: f64 },
    #[error("request {id}: illegal transition {event:?} from {state:?}")]
    IllegalTransition {
        id: RequestId,
        state: RequestState,
        event: LifecycleEvent,
    },
    #[error("request {id}: timestamp {at} precedes previous stamp {prev}")]
    NonMonotoneStamp { id: RequestId, at: Stamp, prev: Stamp },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, ModelError> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(ModelError::InvalidGeoPoint { lat, lon });
        }
        Ok(GeoPoint { lat, lon })
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} {:.6}", self.lat, self.lon)
    }
}

/// Whole minutes since the simulation epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct SimTime(pub u32);

impl SimTime {
    pub const MINUTES_PER_DAY: u32 = 1440;

    pub fn minute(self) -> u32 {
        self.0
    }

    pub fn day(self) -> u32 {
        self.0 / Self::MINUTES_PER_DAY
    }

    pub fn minute_of_day(self) -> u32 {
        self.0 % Self::MINUTES_PER_DAY
    }

    pub fn stamp(self) -> Stamp {
        f64::from(self.0)
    }
}

macro_rules! id_type {
    ($name:ident) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(RequestId);
id_type!(VehicleId);
id_type!(RideId);

/// Pickup and dropoff of one passenger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub src: GeoPoint,
    pub dst: GeoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RequestState {
    Open,
    Critical,
    Paired,
    TaxiAssigned,
    PickedUp,
    Completed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LifecycleEvent {
    BecameCritical,
    Paired,
    TaxiAssigned,
    PickedUp,
    DroppedOff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub t_open: SimTime,
    pub src: GeoPoint,
    pub dst: GeoPoint,
    /// Waiting budget in minutes before the request turns critical.
    pub k_wait: u32,
    pub state: RequestState,
    pub t_paired: Option<Stamp>,
    pub t_taxi: Option<Stamp>,
    pub t_pickup: Option<Stamp>,
    pub t_dest: Option<Stamp>,
}

impl Request {
    pub fn new(id: RequestId, t_open: SimTime, src: GeoPoint, dst: GeoPoint, k_wait: u32) -> Self {
        Request {
            id,
            t_open,
            src,
            dst,
            k_wait,
            state: RequestState::Open,
            t_paired: None,
            t_taxi: None,
            t_pickup: None,
            t_dest: None,
        }
    }

    pub fn trip(&self) -> Trip {
        Trip {
            src: self.src,
            dst: self.dst,
        }
    }

    pub fn is_active(&self) -> bool {
        matches!(self.state, RequestState::Open | RequestState::Critical)
    }

    fn last_stamp(&self) -> Stamp {
        [self.t_dest, self.t_pickup, self.t_taxi, self.t_paired]
            .into_iter()
            .flatten()
            .next()
            .unwrap_or(self.t_open.stamp())
    }

    /// Advances the lifecycle by one event, recording its timestamp.
    pub fn transition(mut self, event: LifecycleEvent, at: Stamp) -> Result<Request, ModelError> {
        use LifecycleEvent as E;
        use RequestState as S;
        let next = match (self.state, event) {
            (S::Open, E::BecameCritical) => S::Critical,
            (S::Open | S::Critical, E::Paired) => S::Paired,
            (S::Paired, E::TaxiAssigned) => S::TaxiAssigned,
            (S::TaxiAssigned, E::PickedUp) => S::PickedUp,
            (S::PickedUp, E::DroppedOff) => S::Completed,
            (state, event) => {
                return Err(ModelError::IllegalTransition {
                    id: self.id,
                    state,
                    event,
                })
            }
        };
        let prev = self.last_stamp();
        if at < prev {
            return Err(ModelError::NonMonotoneStamp {
                id: self.id,
                at,
                prev,
            });
        }
        match event {
            E::BecameCritical => {}
            E::Paired => self.t_paired = Some(at),
            E::TaxiAssigned => self.t_taxi = Some(at),
            E::PickedUp => self.t_pickup = Some(at),
            E::DroppedOff => self.t_dest = Some(at),
        }
        self.state = next;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopKind {
    Pickup,
    Dropoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub request: RequestId,
    pub kind: StopKind,
    pub point: GeoPoint,
}

/// A single or shared ride. For a single ride `r1 == r2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ride {
    pub id: RideId,
    pub r1: RequestId,
    pub r2: RequestId,
    pub trips: [Trip; 2],
    pub order: Vec<Stop>,
    pub total_route_m: f64,
    pub assigned_vehicle: Option<VehicleId>,
}

impl Ride {
    pub fn is_single(&self) -> bool {
        self.r1 == self.r2
    }

    pub fn requests(&self) -> impl Iterator<Item = RequestId> {
        let second = (self.r1 != self.r2).then_some(self.r2);
        std::iter::once(self.r1).chain(second)
    }

    /// Both pickup points; identical for a single ride.
    pub fn sources(&self) -> [GeoPoint; 2] {
        [self.trips[0].src, self.trips[1].src]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: VehicleId,
    pub pos: GeoPoint,
    pub odometer_m: f64,
    pub busy_until: Stamp,
    pub earnings_usd: f64,
    pub last_dropoff_t: Option<Stamp>,
    pub friction_accum_s: f64,
    pub itinerary: std::collections::VecDeque<Stop>,
}

impl Vehicle {
    pub fn new(id: VehicleId, pos: GeoPoint, busy_until: Stamp) -> Self {
        Vehicle {
            id,
            pos,
            odometer_m: 0.0,
            busy_until,
            earnings_usd: 0.0,
            last_dropoff_t: None,
            friction_accum_s: 0.0,
            itinerary: Default::default(),
        }
    }
}

/// When step (a) runs: on every newly critical request or on fixed
/// minute boundaries. Serialized as `"jit"` or a minute count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBatch", into = "RawBatch")]
pub enum BatchMode {
    JustInTime,
    Minutes(u32),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawBatch {
    Minutes(u32),
    Text(String),
}

impl TryFrom<RawBatch> for BatchMode {
    type Error = ModelError;

    fn try_from(raw: RawBatch) -> Result<Self, Self::Error> {
        match raw {
            RawBatch::Minutes(m) => m.to_string().parse(),
            RawBatch::Text(s) => s.parse(),
        }
    }
}

impl From<BatchMode> for RawBatch {
    fn from(mode: BatchMode) -> Self {
        match mode {
            BatchMode::JustInTime => RawBatch::Text("jit".into()),
            BatchMode::Minutes(m) => RawBatch::Minutes(m),
        }
    }
}

impl std::str::FromStr for BatchMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jit" | "just-in-time" => Ok(BatchMode::JustInTime),
            other => other
                .parse::<u32>()
                .ok()
                .filter(|m| *m > 0)
                .map(BatchMode::Minutes)
                .ok_or_else(|| ModelError::InvalidParams(format!("batch mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub w_min: u32,
    pub w_max: u32,
    pub q: f64,
    pub speed_mps: f64,
    pub beta_usd: f64,
    pub pi_single_usd_per_km: f64,
    pub pi_shared_usd_per_km: f64,
    pub cost_usd_per_km: f64,
    pub commission: f64,
    pub batch: BatchMode,
    pub reloc_days: u32,
    pub reloc_minutes: u32,
    pub rng_seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            w_min: 1,
            w_max: 3,
            q: 0.1,
            speed_mps: 6.2,
            beta_usd: 2.2,
            pi_single_usd_per_km: 0.994,
            pi_shared_usd_per_km: 0.8,
            cost_usd_per_km: 0.0686,
            commission: 0.25,
            batch: BatchMode::Minutes(2),
            reloc_days: 3,
            reloc_minutes: 2,
            rng_seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str| Err(ModelError::InvalidParams(what.to_string()));
        if self.w_min == 0 || self.w_min > self.w_max {
            return bad("need 0 < w_min <= w_max");
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return bad("q must lie in (0, 1]");
        }
        let positive = [
            ("speed_mps", self.speed_mps),
            ("beta_usd", self.beta_usd),
            ("pi_single_usd_per_km", self.pi_single_usd_per_km),
            ("pi_shared_usd_per_km", self.pi_shared_usd_per_km),
            ("cost_usd_per_km", self.cost_usd_per_km),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.commission) {
            return bad("commission must lie in [0, 1]");
        }
        if self.reloc_days == 0 || self.reloc_minutes == 0 {
            return bad("relocation windows must be positive");
        }
        Ok(())
    }

    /// Meters covered in one simulated minute.
    pub fn meters_per_minute(&self) -> f64 {
        self.speed_mps * 60.0
    }

    /// Driving time in minutes for `meters`.
    pub fn travel_minutes(&self, meters: f64) -> f64 {
        meters / self.meters_per_minute()
    }
}

/// Minutes a request is willing to wait for a partner: `q` times the
/// expected trip time, rounded half-up and clamped to `[w_min, w_max]`.
pub fn request_waiting_budget(expected_trip_s: f64, params: &SimParams) -> u32 {
    let minutes = params.q * expected_trip_s.max(0.0) / 60.0;
    // floor(x + 0.5) is round-half-up for non-negative x
    let rounded = (minutes + 0.5).floor();
    let clamped = rounded.clamp(f64::from(params.w_min), f64::from(params.w_max));
    clamped as u32
}

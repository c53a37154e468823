//! Trip-record loading and cleaning, the historical request store and a
//! synthetic workload generator.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{manhattan_distance, EARTH_RADIUS_M};
use crate::model::{request_waiting_budget, GeoPoint, Request, RequestId, SimParams, SimTime};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing required column `{0}`")]
    Schema(String),
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("bad workload spec: {0}")]
    Workload(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    pub fn contains(&self, p: GeoPoint) -> bool {
        (self.min_lat..=self.max_lat).contains(&p.lat) && (self.min_lon..=self.max_lon).contains(&p.lon)
    }
}

/// A union of rectangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub boxes: Vec<BoundingBox>,
}

// rough borough rectangles; a point counts if any box holds it
const BOROUGHS: &[(&str, [f64; 4])] = &[
    ("manhattan", [40.700, 40.882, -74.020, -73.907]),
    ("bronx", [40.785, 40.917, -73.933, -73.765]),
    ("brooklyn", [40.570, 40.739, -74.042, -73.833]),
    ("queens", [40.541, 40.801, -73.962, -73.700]),
    ("staten_island", [40.496, 40.648, -74.255, -74.052]),
];

impl Region {
    /// Borough by name, or `nyc` for all five.
    pub fn named(name: &str) -> Result<Region, IngestError> {
        let key = name.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        let pick = |b: &[f64; 4]| BoundingBox {
            min_lat: b[0],
            max_lat: b[1],
            min_lon: b[2],
            max_lon: b[3],
        };
        let boxes: Vec<BoundingBox> = if key == "nyc" {
            BOROUGHS.iter().map(|(_, b)| pick(b)).collect()
        } else {
            BOROUGHS
                .iter()
                .filter(|(n, _)| *n == key)
                .map(|(_, b)| pick(b))
                .collect()
        };
        if boxes.is_empty() {
            return Err(IngestError::UnknownRegion(name.to_string()));
        }
        Ok(Region { name: key, boxes })
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        self.boxes.iter().any(|b| b.contains(p))
    }

    /// Smallest rectangle covering every box.
    pub fn bounds(&self) -> BoundingBox {
        let mut b = self.boxes[0];
        for x in &self.boxes[1..] {
            b.min_lat = b.min_lat.min(x.min_lat);
            b.max_lat = b.max_lat.max(x.max_lat);
            b.min_lon = b.min_lon.min(x.min_lon);
            b.max_lon = b.max_lon.max(x.max_lon);
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawTrip {
    pub pickup_dt: NaiveDateTime,
    pub dropoff_dt: NaiveDateTime,
    pub pickup: GeoPoint,
    pub dropoff: GeoPoint,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub rows: usize,
    pub skipped: usize,
}

const COLUMNS: [&str; 6] = [
    "tpep_pickup_datetime",
    "tpep_dropoff_datetime",
    "pickup_longitude",
    "pickup_latitude",
    "dropoff_longitude",
    "dropoff_latitude",
];

fn parse_dt(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%m/%d/%Y %I:%M:%S %p"))
        .ok()
}

fn parse_point(lat: &str, lon: &str) -> Option<GeoPoint> {
    let lat: f64 = lat.trim().parse().ok()?;
    let lon: f64 = lon.trim().parse().ok()?;
    GeoPoint::new(lat, lon).ok()
}

/// Reads a yellow-cab CSV. Rows that fail to parse are skipped and counted.
/// `region` keeps trips whose pickup lies inside; `days` keeps trips whose
/// pickup date lies in the range.
pub fn load_trips(
    path: &Path,
    region: Option<&Region>,
    days: Option<RangeInclusive<NaiveDate>>,
) -> Result<(Vec<RawTrip>, LoadStats), IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_trips(file, region, days)
}

pub fn read_trips<R: std::io::Read>(
    input: R,
    region: Option<&Region>,
    days: Option<RangeInclusive<NaiveDate>>,
) -> Result<(Vec<RawTrip>, LoadStats), IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let mut idx = [0usize; 6];
    for (k, name) in COLUMNS.iter().enumerate() {
        idx[k] = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| IngestError::Schema(name.to_string()))?;
    }
    let mut stats = LoadStats::default();
    let mut out = Vec::new();
    for row in reader.records() {
        stats.rows += 1;
        let parsed = row.ok().and_then(|r| {
            let f = |k: usize| r.get(idx[k]).unwrap_or("");
            Some(RawTrip {
                pickup_dt: parse_dt(f(0))?,
                dropoff_dt: parse_dt(f(1))?,
                pickup: parse_point(f(3), f(2))?,
                dropoff: parse_point(f(5), f(4))?,
            })
        });
        let Some(trip) = parsed else {
            stats.skipped += 1;
            continue;
        };
        if region.is_some_and(|r| !r.contains(trip.pickup)) {
            continue;
        }
        if days.as_ref().is_some_and(|d| !d.contains(&trip.pickup_dt.date())) {
            continue;
        }
        out.push(trip);
    }
    Ok((out, stats))
}

/// Drops trips shorter than a minute or leaving `region`, converts the rest
/// to requests timed in minutes since `epoch` and assigns waiting budgets.
/// Output is chronological with ids `0..n`.
pub fn clean(trips: &[RawTrip], region: &Region, epoch: NaiveDateTime, params: &SimParams) -> Vec<Request> {
    let mut kept: Vec<&RawTrip> = trips
        .iter()
        .filter(|t| (t.dropoff_dt - t.pickup_dt).num_seconds() >= 60)
        .filter(|t| region.contains(t.pickup) && region.contains(t.dropoff))
        .filter(|t| t.pickup_dt >= epoch)
        .collect();
    kept.sort_by_key(|t| t.pickup_dt);
    kept.iter()
        .enumerate()
        .map(|(i, t)| {
            let minute = (t.pickup_dt - epoch).num_minutes() as u32;
            let trip_s = manhattan_distance(t.pickup, t.dropoff) / params.speed_mps;
            let k = request_waiting_budget(trip_s, params);
            Request::new(RequestId(i as u32), SimTime(minute), t.pickup, t.dropoff, k)
        })
        .collect()
}

/// Past requests indexed by absolute minute.
#[derive(Debug, Clone, Default)]
pub struct HistoryStore {
    by_minute: BTreeMap<u32, Vec<Request>>,
}

impl HistoryStore {
    pub fn new(requests: impl IntoIterator<Item = Request>) -> Self {
        let mut by_minute: BTreeMap<u32, Vec<Request>> = BTreeMap::new();
        for r in requests {
            by_minute.entry(r.t_open.minute()).or_default().push(r);
        }
        HistoryStore { by_minute }
    }

    pub fn len(&self) -> usize {
        self.by_minute.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_minute.is_empty()
    }

    /// Requests from each of the `days` previous days whose time of day
    /// lies within `[t - minutes, t]`. A window reaching back past
    /// midnight continues into the day before.
    pub fn window(&self, t: SimTime, days: u32, minutes: u32) -> Vec<Request> {
        let mut out = Vec::new();
        for d in 1..=days {
            let shift = d * SimTime::MINUTES_PER_DAY;
            let Some(hi) = t.minute().checked_sub(shift) else {
                break;
            };
            let lo = hi.saturating_sub(minutes);
            for rs in self.by_minute.range(lo..=hi).map(|(_, v)| v) {
                out.extend(rs.iter().cloned());
            }
        }
        out
    }
}

pub fn history_window(store: &HistoryStore, t: SimTime, days: u32, minutes: u32) -> Vec<Request> {
    store.window(t, days, minutes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hotspot {
    pub lat: f64,
    pub lon: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// Synthetic demand: Poisson arrivals per minute, endpoints scattered
/// around hot spots. The same daily pattern repeats on every day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    /// Mean arrivals per minute.
    pub rate_per_min: f64,
    /// Days generated; the last day is usually the simulated one.
    #[serde(default = "one_u32")]
    pub days: u32,
    /// Minute of day where generation starts each day.
    #[serde(default)]
    pub start_minute: u32,
    pub duration_min: u32,
    pub sources: Vec<Hotspot>,
    /// Defaults to `sources` when empty.
    #[serde(default)]
    pub destinations: Vec<Hotspot>,
    /// Standard deviation of the scatter around a hot spot, meters.
    pub sigma_m: f64,
    /// When set, sources come from a single hot spot at a time, moving to
    /// the next one every this many minutes.
    #[serde(default)]
    pub shift_every_min: Option<u32>,
    /// Trips shorter than this are redrawn, meters.
    #[serde(default)]
    pub min_trip_m: f64,
}

fn one_u32() -> u32 {
    1
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: &str| Err(IngestError::Workload(m.to_string()));
        if !(self.rate_per_min.is_finite() && self.rate_per_min >= 0.0) {
            return bad("rate_per_min must be non-negative");
        }
        if self.sources.is_empty() {
            return bad("at least one source hot spot is required");
        }
        if !(self.sigma_m.is_finite() && self.sigma_m >= 0.0) {
            return bad("sigma_m must be non-negative");
        }
        if self.shift_every_min == Some(0) {
            return bad("shift_every_min must be positive");
        }
        if self.start_minute + self.duration_min > SimTime::MINUTES_PER_DAY {
            return bad("generation window must fit in one day");
        }
        Ok(())
    }

    /// Absolute minute where the last generated day starts its window.
    pub fn last_day_start(&self) -> SimTime {
        SimTime(self.days.saturating_sub(1) * SimTime::MINUTES_PER_DAY + self.start_minute)
    }
}

fn pick<'a, R: Rng>(spots: &'a [Hotspot], rng: &mut R) -> &'a Hotspot {
    let total: f64 = spots.iter().map(|h| h.weight.max(0.0)).sum();
    let mut u = rng.random::<f64>() * total;
    for h in spots {
        if u < h.weight.max(0.0) {
            return h;
        }
        u -= h.weight.max(0.0);
    }
    &spots[spots.len() - 1]
}

fn scatter<R: Rng>(h: &Hotspot, noise: &Normal<f64>, rng: &mut R) -> GeoPoint {
    let dy = noise.sample(rng);
    let dx = noise.sample(rng);
    let lat = h.lat + (dy / EARTH_RADIUS_M).to_degrees();
    let lon = h.lon + (dx / (EARTH_RADIUS_M * h.lat.to_radians().cos())).to_degrees();
    GeoPoint {
        lat: lat.clamp(-90.0, 90.0),
        lon: lon.clamp(-180.0, 180.0),
    }
}

/// Generates requests for every day in the spec. Deterministic per seed.
pub fn synth_generate(spec: &WorkloadSpec, params: &SimParams, seed: u64) -> Result<Vec<Request>, IngestError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.sigma_m).map_err(|e| IngestError::Workload(e.to_string()))?;
    let dests = if spec.destinations.is_empty() {
        &spec.sources
    } else {
        &spec.destinations
    };
    let mut out = Vec::new();
    if spec.rate_per_min == 0.0 {
        return Ok(out);
    }
    let poisson = Poisson::new(spec.rate_per_min).map_err(|e| IngestError::Workload(e.to_string()))?;
    for day in 0..spec.days {
        for m in 0..spec.duration_min {
            let minute = day * SimTime::MINUTES_PER_DAY + spec.start_minute + m;
            let count = poisson.sample(&mut rng) as u64;
            for _ in 0..count {
                let src_spot = match spec.shift_every_min {
                    Some(every) => &spec.sources[((m / every) as usize) % spec.sources.len()],
                    None => pick(&spec.sources, &mut rng),
                };
                let (src, dst) = loop {
                    let s = scatter(src_spot, &noise, &mut rng);
                    let d = scatter(pick(dests, &mut rng), &noise, &mut rng);
                    if manhattan_distance(s, d) >= spec.min_trip_m {
                        break (s, d);
                    }
                };
                let trip_s = manhattan_distance(src, dst) / params.speed_mps;
                let k = request_waiting_budget(trip_s, params);
                out.push(Request::new(RequestId(out.len() as u32), SimTime(minute), src, dst, k));
            }
        }
    }
    Ok(out)
}

pub fn load_workload(path: &Path) -> Result<WorkloadSpec, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let spec: WorkloadSpec = toml::from_str(&text).map_err(|e| IngestError::Workload(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

/// Splits requests into those before `t0` and those from `t0` on, giving
/// the second part fresh ids `0..n`.
pub fn split_at(requests: Vec<Request>, t0: SimTime) -> (Vec<Request>, Vec<Request>) {
    let (past, mut live): (Vec<Request>, Vec<Request>) = requests.into_iter().partition(|r| r.t_open < t0);
    for (i, r) in live.iter_mut().enumerate() {
        r.id = RequestId(i as u32);
    }
    (past, live)
}

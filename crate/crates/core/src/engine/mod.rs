//! The minute-by-minute simulation loop and its configuration.

pub mod check;
pub mod fleet;
pub mod log;
mod sim;

pub use check::{check_run, fare_violations, MatcherAudit};
pub use fleet::{compute_base_fleet, initial_fleet, scaled_fleet};
pub use log::{Event, EventKind, EventLog, Step};
pub use sim::simulate;

use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hst::HstError;
use crate::ingest::{clean, load_trips, split_at, synth_generate, IngestError, Region, WorkloadSpec};
use crate::metrics::{MetricsError, MetricsReport};
use crate::model::{ModelError, Request, SimParams, SimTime, Vehicle};
use crate::relocation::RelocMatcher;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("need {needed} requests before the start to place the fleet, found {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Hst(#[from] HstError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("simulation did not drain by minute {0}")]
    Stalled(u32),
}

/// The evaluated algorithm combinations for pairing and dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mwm,
    Alma,
    Greedy,
    Appr,
    Pg,
    Gd,
    Bal,
    Har,
    Dc,
    Wfa,
    Ktaxi,
    Single,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    Mwm,
    Alma,
    Greedy,
    Random,
    Appr,
    Pg,
    Gd,
    /// Every request rides alone.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dispatch {
    Mwm,
    Alma,
    Greedy,
    Random,
    Appr,
    Balance,
    Harmonic,
    DoubleCoverage,
    Wfa,
    KTaxi,
}

impl Algorithm {
    pub const ALL: [Algorithm; 13] = [
        Algorithm::Mwm,
        Algorithm::Alma,
        Algorithm::Greedy,
        Algorithm::Appr,
        Algorithm::Pg,
        Algorithm::Gd,
        Algorithm::Bal,
        Algorithm::Har,
        Algorithm::Dc,
        Algorithm::Wfa,
        Algorithm::Ktaxi,
        Algorithm::Single,
        Algorithm::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mwm => "MWM",
            Algorithm::Alma => "ALMA",
            Algorithm::Greedy => "Greedy",
            Algorithm::Appr => "Appr",
            Algorithm::Pg => "PG",
            Algorithm::Gd => "GD",
            Algorithm::Bal => "Bal",
            Algorithm::Har => "Har",
            Algorithm::Dc => "DC",
            Algorithm::Wfa => "WFA",
            Algorithm::Ktaxi => "k-Taxi",
            Algorithm::Single => "Single",
            Algorithm::Random => "Random",
        }
    }

    /// Pairing and dispatch algorithms used by this combination.
    pub fn steps(self) -> (Pairing, Dispatch) {
        match self {
            Algorithm::Mwm => (Pairing::Mwm, Dispatch::Mwm),
            Algorithm::Alma => (Pairing::Alma, Dispatch::Alma),
            Algorithm::Greedy => (Pairing::Greedy, Dispatch::Greedy),
            Algorithm::Random => (Pairing::Random, Dispatch::Random),
            Algorithm::Appr => (Pairing::Appr, Dispatch::Appr),
            Algorithm::Pg => (Pairing::Pg, Dispatch::Mwm),
            Algorithm::Gd => (Pairing::Gd, Dispatch::Mwm),
            Algorithm::Bal => (Pairing::Mwm, Dispatch::Balance),
            Algorithm::Har => (Pairing::Mwm, Dispatch::Harmonic),
            Algorithm::Dc => (Pairing::Mwm, Dispatch::DoubleCoverage),
            Algorithm::Wfa => (Pairing::Mwm, Dispatch::Wfa),
            Algorithm::Ktaxi => (Pairing::Mwm, Dispatch::KTaxi),
            Algorithm::Single => (Pairing::None, Dispatch::Mwm),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().to_ascii_lowercase().replace('-', "") == key)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// Trips from a yellow-cab CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripsSource {
    pub path: PathBuf,
    #[serde(default = "default_region")]
    pub region: String,
    /// Simulated day.
    pub date: NaiveDate,
    /// Start of the simulated span, `HH:MM`.
    #[serde(default = "midnight")]
    pub from: String,
    /// End of the simulated span (exclusive), `HH:MM`; `24:00` for the
    /// whole day.
    #[serde(default = "end_of_day")]
    pub to: String,
    /// Prior days loaded for history.
    #[serde(default = "three")]
    pub history_days: u32,
}

fn default_region() -> String {
    "manhattan".into()
}
fn midnight() -> String {
    "00:00".into()
}
fn end_of_day() -> String {
    "24:00".into()
}
fn three() -> u32 {
    3
}

/// Minute of day for `HH:MM`, accepting `24:00`.
pub fn parse_clock(s: &str) -> Result<u32, EngineError> {
    if s.trim() == "24:00" {
        return Ok(SimTime::MINUTES_PER_DAY);
    }
    let t = NaiveTime::parse_from_str(s.trim(), "%H:%M").map_err(|_| EngineError::Config(format!("bad clock time `{s}`")))?;
    use chrono::Timelike;
    Ok(t.hour() * 60 + t.minute())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HstConfig {
    /// Street graph file; a square grid over the demand area otherwise.
    #[serde(default)]
    pub street_graph: Option<PathBuf>,
    #[serde(default = "default_spacing")]
    pub grid_spacing_m: f64,
    /// Separation factor; derived from the number of points and taxis
    /// when unset.
    #[serde(default)]
    pub sigma: Option<f64>,
}

fn default_spacing() -> f64 {
    400.0
}

impl Default for HstConfig {
    fn default() -> Self {
        HstConfig {
            street_graph: None,
            grid_spacing_m: default_spacing(),
            sigma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WfaConfig {
    #[serde(default = "eight")]
    pub window: usize,
    #[serde(default = "eight")]
    pub candidates: usize,
}

fn eight() -> usize {
    8
}

impl Default for WfaConfig {
    fn default() -> Self {
        WfaConfig { window: 8, candidates: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub algorithm: Algorithm,
    /// Matcher for relocation; none disables it.
    #[serde(default)]
    pub relocation: Option<RelocMatcher>,
    /// Fleet as a multiple of the base number.
    #[serde(default = "unit")]
    pub fleet_multiplier: f64,
    /// Explicit fleet size, overriding the multiplier.
    #[serde(default)]
    pub fleet: Option<usize>,
    /// Seed for synthetic demand (the run seed is `params.rng_seed`).
    #[serde(default)]
    pub workload_seed: u64,
    /// Only pair requests whose pickups are at most this far apart.
    #[serde(default)]
    pub pair_radius_m: Option<f64>,
    /// Cross-check every matching graph against MWM, ALMA and Greedy.
    #[serde(default)]
    pub audit: bool,
    #[serde(default)]
    pub params: SimParams,
    #[serde(default)]
    pub synthetic: Option<WorkloadSpec>,
    #[serde(default)]
    pub trips: Option<TripsSource>,
    #[serde(default)]
    pub hst: HstConfig,
    #[serde(default)]
    pub wfa: WfaConfig,
}

fn default_name() -> String {
    "run".into()
}
fn unit() -> f64 {
    1.0
}

impl ScenarioConfig {
    pub fn new(algorithm: Algorithm, synthetic: WorkloadSpec) -> Self {
        ScenarioConfig {
            name: algorithm.name().to_string(),
            algorithm,
            relocation: None,
            fleet_multiplier: 1.0,
            fleet: None,
            workload_seed: 0,
            pair_radius_m: None,
            audit: false,
            params: SimParams::default(),
            synthetic: Some(synthetic),
            trips: None,
            hst: HstConfig::default(),
            wfa: WfaConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, EngineError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| EngineError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let text = std::fs::read_to_string(path).map_err(|source| {
            EngineError::Ingest(IngestError::Io {
                path: path.display().to_string(),
                source,
            })
        })?;
        let mut cfg = Self::from_toml(&text)?;
        // relative data paths are taken from the config's directory
        if let (Some(t), Some(dir)) = (cfg.trips.as_mut(), path.parent()) {
            if t.path.is_relative() {
                t.path = dir.join(&t.path);
            }
        }
        if let (Some(g), Some(dir)) = (cfg.hst.street_graph.as_mut(), path.parent()) {
            if g.is_relative() {
                *g = dir.join(&*g);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        self.params.validate()?;
        match (&self.synthetic, &self.trips) {
            (Some(w), None) => w.validate()?,
            (None, Some(t)) => {
                Region::named(&t.region)?;
                if parse_clock(&t.from)? >= parse_clock(&t.to)? {
                    return Err(EngineError::Config("empty time span".into()));
                }
            }
            _ => return Err(EngineError::Config("exactly one of [synthetic] or [trips] is required".into())),
        }
        if !(self.fleet_multiplier.is_finite() && self.fleet_multiplier > 0.0) {
            return Err(EngineError::Config("fleet_multiplier must be positive".into()));
        }
        if self.wfa.candidates == 0 {
            return Err(EngineError::Config("wfa.candidates must be positive".into()));
        }
        if !(self.hst.grid_spacing_m.is_finite() && self.hst.grid_spacing_m > 0.0) {
            return Err(EngineError::Config("hst.grid_spacing_m must be positive".into()));
        }
        if self.hst.sigma.is_some_and(|s| !(s >= 2.0)) {
            return Err(EngineError::Config("hst.sigma must be at least 2".into()));
        }
        Ok(())
    }
}

/// Requests to simulate and the history before them.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Chronological, ids `0..n`.
    pub live: Vec<Request>,
    pub history: Vec<Request>,
    pub t0: SimTime,
    /// First minute after the span.
    pub end: SimTime,
}

pub fn load_scenario(cfg: &ScenarioConfig) -> Result<Scenario, EngineError> {
    cfg.validate()?;
    if let Some(w) = &cfg.synthetic {
        let all = synth_generate(w, &cfg.params, cfg.workload_seed)?;
        let t0 = w.last_day_start();
        let (history, live) = split_at(all, t0);
        return Ok(Scenario {
            live,
            history,
            t0,
            end: SimTime(t0.0 + w.duration_min),
        });
    }
    let t = cfg.trips.as_ref().expect("validated");
    let region = Region::named(&t.region)?;
    let first = t.date - chrono::Duration::days(i64::from(t.history_days));
    let (raw, _) = load_trips(&t.path, Some(&region), Some(first..=t.date))?;
    let epoch = first.and_hms_opt(0, 0, 0).expect("midnight");
    let requests = clean(&raw, &region, epoch, &cfg.params);
    let day0 = t.history_days * SimTime::MINUTES_PER_DAY;
    let t0 = SimTime(day0 + parse_clock(&t.from)?);
    let end = SimTime(day0 + parse_clock(&t.to)?);
    let (history, mut live) = split_at(requests, t0);
    live.retain(|r| r.t_open < end);
    Ok(Scenario { live, history, t0, end })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: EventLog,
    pub report: MetricsReport,
    /// Final state of every taxi.
    pub fleet: Vec<Vehicle>,
    /// Final state of every request.
    pub requests: Vec<Request>,
    pub base_fleet: usize,
    pub audit: MatcherAudit,
}

/// Loads the scenario and simulates it.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, EngineError> {
    let scenario = load_scenario(cfg)?;
    simulate(cfg, &scenario)
}

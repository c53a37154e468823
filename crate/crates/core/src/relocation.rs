//! Pre-positioning idle taxis toward demand sampled from history.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::HistoryStore;
use crate::matchgraph::{build_request_graph_with, build_ride_taxi_graph};
use crate::matching::{alma, greedy, mwm, Matching};
use crate::matchgraph::MatchGraph;
use crate::model::{GeoPoint, Request, SimTime, Trip, Vehicle, VehicleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelocMatcher {
    Mwm,
    Alma,
    Greedy,
}

impl RelocMatcher {
    pub fn run(self, graph: &MatchGraph, seed: u64) -> Matching {
        match self {
            RelocMatcher::Mwm => mwm(graph),
            RelocMatcher::Alma => alma(graph, crate::matching::AlmaConfig::default().max_rounds, seed),
            RelocMatcher::Greedy => greedy(graph, seed),
        }
    }
}

/// A history sample standing in for a request that may appear soon. It is
/// only ever a relocation target.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedRequest {
    pub request: Request,
    pub phantom: bool,
}

/// Draws one day's share of the history window without replacement.
pub fn sample_future(store: &HistoryStore, t: SimTime, days: u32, minutes: u32, seed: u64) -> Vec<ExpectedRequest> {
    let past = store.window(t, days, minutes);
    if past.is_empty() || days == 0 {
        return Vec::new();
    }
    let n = past.len().div_ceil(days as usize).min(past.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = index::sample(&mut rng, past.len(), n).into_vec();
    picks.sort_unstable();
    picks
        .into_iter()
        .map(|i| ExpectedRequest {
            request: past[i].clone(),
            phantom: true,
        })
        .collect()
}

/// Targets for idle vehicles: pair expected and active requests into rides,
/// match rides to the idle vehicles by reciprocal distance, and send each
/// matched vehicle to its ride's source (a random one of the two for a
/// pair).
pub fn relocate(
    idle: &[Vehicle],
    actives: &[Request],
    future: &[ExpectedRequest],
    matcher: RelocMatcher,
    seed: u64,
) -> Vec<(VehicleId, GeoPoint)> {
    let trips: Vec<Trip> = future
        .iter()
        .map(|f| f.request.trip())
        .chain(actives.iter().map(Request::trip))
        .collect();
    if idle.is_empty() || trips.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairing = matcher.run(&build_request_graph_with(&trips, None), rng.random());
    let mut rides: Vec<(Trip, Option<Trip>)> = pairing.pairs.iter().map(|&(a, b)| (trips[a], Some(trips[b]))).collect();
    rides.extend(pairing.unmatched.iter().map(|&a| (trips[a], None)));

    let g = build_ride_taxi_graph(&rides, idle);
    let left = rides.len();
    let assignment = matcher.run(&g, rng.random());
    let mut out: Vec<(VehicleId, GeoPoint)> = assignment
        .pairs
        .iter()
        .map(|&(r, v)| {
            let (a, b) = rides[r];
            let target = match b {
                Some(b) if rng.random_bool(0.5) => b.src,
                _ => a.src,
            };
            (idle[v - left].id, target)
        })
        .collect();
    out.sort_by_key(|x| x.0);
    out
}

//! Fleet sizing and initial placement.

use crate::geo::manhattan_distance;
use crate::model::{Request, SimParams, SimTime, Stamp, Vehicle, VehicleId};

use super::EngineError;

/// Number of taxis needed to serve every request as a single ride without
/// queuing: each request takes the nearest free taxi, and a new one is
/// spawned at its pickup when none is free.
pub fn compute_base_fleet(requests: &[Request], params: &SimParams) -> usize {
    let mpm = params.meters_per_minute();
    // (busy_until, position)
    let mut fleet: Vec<(Stamp, crate::model::GeoPoint)> = Vec::new();
    for r in requests {
        let now = r.t_open.stamp();
        let nearest = fleet
            .iter()
            .enumerate()
            .filter(|(_, v)| v.0 <= now)
            .map(|(i, v)| (manhattan_distance(v.1, r.src), i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let trip = manhattan_distance(r.src, r.dst);
        match nearest {
            Some((approach, i)) => fleet[i] = (now + (approach + trip) / mpm, r.dst),
            None => fleet.push((now + trip / mpm, r.dst)),
        }
    }
    fleet.len()
}

/// `count` taxis at the dropoffs of the last `count` requests before `t0`,
/// each busy until that trip would end. Dropoff times are the modeled
/// driving times.
pub fn initial_fleet(history: &[Request], count: usize, t0: SimTime, params: &SimParams) -> Result<Vec<Vehicle>, EngineError> {
    let before: Vec<&Request> = history.iter().filter(|r| r.t_open < t0).collect();
    if before.len() < count {
        return Err(EngineError::InsufficientHistory {
            needed: count,
            available: before.len(),
        });
    }
    Ok(before[before.len() - count..]
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let done = r.t_open.stamp() + params.travel_minutes(manhattan_distance(r.src, r.dst));
            Vehicle::new(VehicleId(i as u32), r.dst, done)
        })
        .collect())
}

/// Fleet for a multiplier of the base number, at least one taxi whenever
/// there is demand.
pub fn scaled_fleet(base: usize, multiplier: f64) -> usize {
    let n = (base as f64 * multiplier).round() as usize;
    if base > 0 {
        n.max(1)
    } else {
        n
    }
}

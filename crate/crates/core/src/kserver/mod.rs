//! Ride-to-taxi dispatchers from the k-server and k-taxi literature.
//!
//! Each chooser serves one ride at a time. A ride is represented by a
//! single source point, drawn uniformly between its two pickups.

pub mod dc;
pub mod ktaxi;
pub mod wfa;

pub use dc::{dc_choose, DcOutcome, HstDispatchState, TreePoint};
pub use ktaxi::{ktaxi_choose, ktaxi_probabilities};
pub use wfa::{wfa_choose, WfaWindow};

use rand::Rng;

use crate::geo::manhattan_distance;
use crate::matchgraph::MIN_DISPATCH_DISTANCE_M;
use crate::model::{GeoPoint, Ride, Vehicle, VehicleId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeVehicle {
    pub id: VehicleId,
    pub pos: GeoPoint,
    pub odometer_m: f64,
}

impl From<&Vehicle> for FreeVehicle {
    fn from(v: &Vehicle) -> Self {
        FreeVehicle {
            id: v.id,
            pos: v.pos,
            odometer_m: v.odometer_m,
        }
    }
}

/// Free vehicles and the point a ride is served from.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchContext {
    pub vehicles: Vec<FreeVehicle>,
    pub source: GeoPoint,
}

impl DispatchContext {
    pub fn new(vehicles: Vec<FreeVehicle>, source: GeoPoint) -> Self {
        assert!(!vehicles.is_empty(), "dispatch needs a free vehicle");
        DispatchContext { vehicles, source }
    }
}

/// Uniform choice between the two pickups of a ride.
pub fn ride_source<R: Rng + ?Sized>(ride: &Ride, rng: &mut R) -> GeoPoint {
    if ride.is_single() {
        ride.trips[0].src
    } else {
        ride.sources()[usize::from(rng.random_bool(0.5))]
    }
}

/// Least odometer plus approach distance; ties go to the lowest id.
pub fn balance_choose(ctx: &DispatchContext) -> VehicleId {
    ctx.vehicles
        .iter()
        .map(|v| (v.odometer_m + manhattan_distance(v.pos, ctx.source), v.id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
        .expect("non-empty context")
}

/// Selection probabilities proportional to inverse approach distance.
pub fn harmonic_probabilities(ctx: &DispatchContext) -> Vec<(VehicleId, f64)> {
    let inv: Vec<f64> = ctx
        .vehicles
        .iter()
        .map(|v| 1.0 / manhattan_distance(v.pos, ctx.source).max(MIN_DISPATCH_DISTANCE_M))
        .collect();
    let total: f64 = inv.iter().sum();
    ctx.vehicles.iter().zip(inv).map(|(v, x)| (v.id, x / total)).collect()
}

pub fn harmonic_choose<R: Rng + ?Sized>(ctx: &DispatchContext, rng: &mut R) -> VehicleId {
    sample(&harmonic_probabilities(ctx), rng)
}

/// Draws from a discrete distribution given as `(item, probability)`.
pub(crate) fn sample<T: Copy, R: Rng + ?Sized>(dist: &[(T, f64)], rng: &mut R) -> T {
    let total: f64 = dist.iter().map(|d| d.1).sum();
    let mut u = rng.random::<f64>() * total;
    for &(item, p) in dist {
        if u < p {
            return item;
        }
        u -= p;
    }
    dist.iter().rev().find(|d| d.1 > 0.0).unwrap_or(&dist[dist.len() - 1]).0
}

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::check::MatcherAudit;
use super::fleet::{compute_base_fleet, initial_fleet, scaled_fleet};
use super::log::{EventKind, EventLog, Step};
use super::{Dispatch, EngineError, Pairing, RunOutput, Scenario, ScenarioConfig};
use crate::geo::{manhattan_distance, move_along, shared_route_from, StopOrder};
use crate::hst::{theoretical_sigma, HstMap, StreetGraph};
use crate::ingest::HistoryStore;
use crate::kserver::{
    balance_choose, dc_choose, harmonic_choose, ktaxi_choose, ride_source, wfa_choose, DispatchContext, FreeVehicle,
    HstDispatchState, WfaWindow,
};
use crate::matchgraph::{build_request_graph_with, build_ride_taxi_graph, make_ride, ride_trips, MatchGraph};
use crate::matching::{alma, appr_dispatch, appr_pairing, greedy, mwm, random_match, AlmaConfig, Matching};
use crate::metrics::{finalize, ride_revenue};
use crate::model::{
    GeoPoint, LifecycleEvent, Request, RequestId, RequestState, Ride, RideId, SimParams, SimTime, Stamp, StopKind,
    Trip, Vehicle, VehicleId,
};
use crate::relocation::{relocate, sample_future};

/// Minutes past the end of the span allowed for serving what is left.
const DRAIN_MINUTES: u32 = 7 * SimTime::MINUTES_PER_DAY;
/// Upper bound on nodes of the generated street grid.
const MAX_GRID_NODES: usize = 1600;

/// Runs the scenario minute by minute until every request is delivered.
pub fn simulate(cfg: &ScenarioConfig, scenario: &Scenario) -> Result<RunOutput, EngineError> {
    cfg.validate()?;
    let params = &cfg.params;
    let base_fleet = compute_base_fleet(&scenario.live, params);
    let count = cfg.fleet.unwrap_or_else(|| scaled_fleet(base_fleet, cfg.fleet_multiplier));
    let vehicles = initial_fleet(&scenario.history, count, scenario.t0, params)?;
    let mut sim = Sim::new(cfg, scenario, vehicles)?;

    let mut t = scenario.t0.minute();
    let limit = scenario.end.minute().max(t) + DRAIN_MINUTES;
    while t < scenario.end.minute() || !sim.drained() {
        if t >= limit {
            return Err(EngineError::Stalled(t));
        }
        sim.tick(SimTime(t))?;
        t += 1;
    }
    sim.flush(f64::from(t));

    let report = finalize(&sim.log, &sim.vehicles, params)?;
    Ok(RunOutput {
        log: sim.log,
        report,
        fleet: sim.vehicles,
        requests: sim.requests,
        base_fleet,
        audit: sim.audit,
    })
}

#[derive(Debug, Clone, Copy)]
struct Leg {
    from: GeoPoint,
    to: GeoPoint,
    total: f64,
    done: f64,
}

#[derive(Debug, Clone, Default)]
struct Motion {
    ride: Option<RideId>,
    order: Option<StopOrder>,
    /// Position when the current ride was assigned.
    start: Option<GeoPoint>,
    reloc: Option<GeoPoint>,
    leg: Option<Leg>,
}

struct TreeState {
    map: HstMap,
    state: HstDispatchState,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    params: &'a SimParams,
    pairing: Pairing,
    dispatch: Dispatch,
    t0: SimTime,
    mpm: f64,
    requests: Vec<Request>,
    next_admit: usize,
    /// Requests not yet in a ride.
    active: BTreeSet<RequestId>,
    rides: Vec<Ride>,
    /// Rides waiting for a taxi, oldest first.
    pending: Vec<RideId>,
    vehicles: Vec<Vehicle>,
    motion: Vec<Motion>,
    log: EventLog,
    rng: ChaCha8Rng,
    pg: crate::online::PgState,
    gd: crate::online::GdState,
    tree: Option<TreeState>,
    wfa: WfaWindow,
    history: HistoryStore,
    audit: MatcherAudit,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig, scenario: &Scenario, vehicles: Vec<Vehicle>) -> Result<Self, EngineError> {
        let params = &cfg.params;
        let (pairing, dispatch) = cfg.algorithm.steps();
        for (i, r) in scenario.live.iter().enumerate() {
            if r.id.index() != i {
                return Err(EngineError::Config("request ids must be 0..n in order".into()));
            }
        }
        let tree = match dispatch {
            Dispatch::DoubleCoverage | Dispatch::KTaxi if !scenario.live.is_empty() => {
                let graph = match &cfg.hst.street_graph {
                    Some(path) => StreetGraph::load(path)?,
                    None => demand_grid(
                        scenario
                            .live
                            .iter()
                            .flat_map(|r| [r.src, r.dst])
                            .chain(vehicles.iter().map(|v| v.pos)),
                        cfg.hst.grid_spacing_m,
                    ),
                };
                let sigma = cfg.hst.sigma.unwrap_or_else(|| theoretical_sigma(graph.len(), vehicles.len()));
                let map = HstMap::build(graph, sigma, params.rng_seed)?;
                let mut state = HstDispatchState::new();
                for v in &vehicles {
                    state.place(v.id, map.leaf_for(v.pos));
                }
                Some(TreeState { map, state })
            }
            _ => None,
        };
        Ok(Sim {
            cfg,
            params,
            pairing,
            dispatch,
            t0: scenario.t0,
            mpm: params.meters_per_minute(),
            requests: scenario.live.clone(),
            next_admit: 0,
            active: BTreeSet::new(),
            rides: Vec::new(),
            pending: Vec::new(),
            motion: vec![Motion::default(); vehicles.len()],
            vehicles,
            log: EventLog::default(),
            rng: ChaCha8Rng::seed_from_u64(params.rng_seed),
            pg: crate::online::PgState::new(),
            gd: crate::online::GdState::new(params.meters_per_minute()),
            tree,
            wfa: WfaWindow::new(cfg.wfa.window, cfg.wfa.candidates),
            history: HistoryStore::new(scenario.history.iter().cloned()),
            audit: MatcherAudit::default(),
        })
    }

    fn drained(&self) -> bool {
        self.next_admit == self.requests.len() && self.requests.iter().all(|r| r.state == RequestState::Completed)
    }

    fn is_free(&self, i: usize, now: Stamp) -> bool {
        self.motion[i].ride.is_none() && self.vehicles[i].busy_until <= now + 1e-9
    }

    fn tick(&mut self, t: SimTime) -> Result<(), EngineError> {
        self.admit(t)?;
        let newly = self.promote(t)?;
        self.pair(t, &newly)?;
        self.dispatch(t.stamp())?;
        self.relocate(t);
        self.advance_all(t.stamp())
    }

    fn step_request(&mut self, id: RequestId, ev: LifecycleEvent, at: Stamp) -> Result<(), EngineError> {
        let r = &mut self.requests[id.index()];
        *r = r.clone().transition(ev, at)?;
        Ok(())
    }

    fn admit(&mut self, t: SimTime) -> Result<(), EngineError> {
        let now = t.stamp();
        while self.next_admit < self.requests.len() && self.requests[self.next_admit].t_open <= t {
            let r = &self.requests[self.next_admit];
            let (id, trip) = (r.id, r.trip());
            self.log.push(
                now,
                EventKind::Open {
                    request: id,
                    src: r.src,
                    dst: r.dst,
                    k_wait: r.k_wait,
                },
            );
            self.next_admit += 1;
            match self.pairing {
                Pairing::None => self.open_ride(id, None, now)?,
                Pairing::Pg => {
                    let start = Instant::now();
                    self.pg.on_arrival(id, trip);
                    self.log.elapsed.add(Step::Pairing, nanos(start));
                    self.active.insert(id);
                }
                Pairing::Gd => {
                    self.gd.add(id, trip, t);
                    self.active.insert(id);
                }
                _ => {
                    self.active.insert(id);
                }
            }
        }
        Ok(())
    }

    /// Marks requests whose waiting budget ran out.
    fn promote(&mut self, t: SimTime) -> Result<Vec<RequestId>, EngineError> {
        let newly: Vec<RequestId> = self
            .active
            .iter()
            .copied()
            .filter(|id| {
                let r = &self.requests[id.index()];
                r.state == RequestState::Open && t.minute() - r.t_open.minute() >= r.k_wait
            })
            .collect();
        for &id in &newly {
            self.step_request(id, LifecycleEvent::BecameCritical, t.stamp())?;
            self.log.push(t.stamp(), EventKind::Critical { request: id });
        }
        Ok(newly)
    }

    /// Moves requests into a ride, single when `b` is `None`.
    fn open_ride(&mut self, a: RequestId, b: Option<RequestId>, now: Stamp) -> Result<(), EngineError> {
        for id in std::iter::once(a).chain(b) {
            self.active.remove(&id);
            self.step_request(id, LifecycleEvent::Paired, now)?;
        }
        self.log.push(
            now,
            EventKind::Paired {
                request: a,
                partner: b.unwrap_or(a),
            },
        );
        if let Some(b) = b {
            self.log.push(now, EventKind::Paired { request: b, partner: a });
        }
        let id = RideId(self.rides.len() as u32);
        let ta = self.requests[a.index()].trip();
        let second = b.map(|b| (b, self.requests[b.index()].trip()));
        self.rides.push(make_ride(id, (a, ta), second));
        self.pending.push(id);
        Ok(())
    }

    fn pair(&mut self, t: SimTime, newly: &[RequestId]) -> Result<(), EngineError> {
        let now = t.stamp();
        match self.pairing {
            Pairing::None => {}
            Pairing::Pg => {
                let start = Instant::now();
                let mut decisions = Vec::new();
                for &id in newly {
                    if self.pg.is_live(id) {
                        decisions.push(self.pg.on_critical(id, &mut self.rng));
                    }
                }
                self.log.elapsed.add(Step::Pairing, nanos(start));
                for d in decisions {
                    match d {
                        crate::online::PgDecision::Pair(a, b) => self.open_ride(a, Some(b), now)?,
                        crate::online::PgDecision::Single(a) => self.open_ride(a, None, now)?,
                    }
                }
            }
            Pairing::Gd => {
                let start = Instant::now();
                let pairs = self.gd.tick(t);
                self.log.elapsed.add(Step::Pairing, nanos(start));
                for (a, b) in pairs {
                    self.open_ride(a, Some(b), now)?;
                }
                // critical requests get one more waiting budget before
                // they go alone
                let expired: Vec<RequestId> = self
                    .active
                    .iter()
                    .copied()
                    .filter(|id| {
                        let r = &self.requests[id.index()];
                        r.state == RequestState::Critical
                            && t.minute() - r.t_open.minute() >= r.k_wait + r.k_wait.max(1)
                    })
                    .collect();
                for id in expired {
                    self.gd.remove(id);
                    self.open_ride(id, None, now)?;
                }
            }
            offline => {
                let trigger = match self.params.batch {
                    crate::model::BatchMode::JustInTime => !newly.is_empty(),
                    crate::model::BatchMode::Minutes(b) => (t.minute() - self.t0.minute()) % b.max(1) == 0,
                };
                if !trigger || self.active.is_empty() {
                    return Ok(());
                }
                let ids: Vec<RequestId> = self.active.iter().copied().collect();
                let trips: Vec<Trip> = ids.iter().map(|id| self.requests[id.index()].trip()).collect();
                let start = Instant::now();
                let pairs: Vec<(usize, Option<usize>)> = if offline == Pairing::Appr {
                    let p = appr_pairing(&trips);
                    self.log.elapsed.add(Step::Pairing, nanos(start));
                    p
                } else {
                    let g = build_request_graph_with(&trips, self.cfg.pair_radius_m);
                    let seed = self.rng.random();
                    let m = run_offline(offline_kind(offline), &g, seed);
                    self.log.elapsed.add(Step::Pairing, nanos(start));
                    if self.cfg.audit {
                        self.audit.record(&g, seed);
                    }
                    m.pairs.iter().map(|&(a, b)| (a, Some(b))).collect()
                };
                for (a, b) in pairs {
                    self.open_ride(ids[a], b.map(|j| ids[j]), now)?;
                }
                for id in ids {
                    if self.active.contains(&id) && self.requests[id.index()].state == RequestState::Critical {
                        self.open_ride(id, None, now)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn dispatch(&mut self, now: Stamp) -> Result<(), EngineError> {
        if self.pending.is_empty() {
            return Ok(());
        }
        let free: Vec<usize> = (0..self.vehicles.len()).filter(|&i| self.is_free(i, now)).collect();
        if free.is_empty() {
            return Ok(());
        }
        let start = Instant::now();
        let ride_trips_of = |sim: &Self| -> Vec<(Trip, Option<Trip>)> {
            sim.pending.iter().map(|r| ride_trips(&sim.rides[r.index()])).collect()
        };
        // (index into pending, vehicle index)
        let assignments: Vec<(usize, usize)> = match self.dispatch {
            Dispatch::Mwm | Dispatch::Alma | Dispatch::Greedy | Dispatch::Random | Dispatch::Appr => {
                let trips = ride_trips_of(self);
                let vs: Vec<Vehicle> = free.iter().map(|&i| self.vehicles[i].clone()).collect();
                if self.dispatch == Dispatch::Appr {
                    let a = appr_dispatch(&trips, &vs);
                    self.log.elapsed.add(Step::Dispatch, nanos(start));
                    a.into_iter().map(|(r, v)| (r, free[v])).collect()
                } else {
                    let g = build_ride_taxi_graph(&trips, &vs);
                    let seed = self.rng.random();
                    let kind = match self.dispatch {
                        Dispatch::Mwm => Offline::Mwm,
                        Dispatch::Alma => Offline::Alma,
                        Dispatch::Greedy => Offline::Greedy,
                        _ => Offline::Random,
                    };
                    let m = run_offline(kind, &g, seed);
                    self.log.elapsed.add(Step::Dispatch, nanos(start));
                    if self.cfg.audit {
                        self.audit.record(&g, seed);
                    }
                    let left = trips.len();
                    m.pairs.iter().map(|&(r, v)| (r, free[v - left])).collect()
                }
            }
            _ => {
                let a = self.dispatch_online(&free);
                self.log.elapsed.add(Step::Dispatch, nanos(start));
                a
            }
        };

        let mut taken = vec![false; self.pending.len()];
        for &(k, vi) in &assignments {
            taken[k] = true;
            self.assign(self.pending[k], vi, now)?;
        }
        let mut k = 0;
        self.pending.retain(|_| {
            k += 1;
            !taken[k - 1]
        });
        Ok(())
    }

    /// Serves pending rides one at a time with a k-server chooser.
    fn dispatch_online(&mut self, free: &[usize]) -> Vec<(usize, usize)> {
        let mut avail: Vec<usize> = free.to_vec();
        let mut out = Vec::new();
        for k in 0..self.pending.len() {
            if avail.is_empty() {
                break;
            }
            let ride = &self.rides[self.pending[k].index()];
            let src = ride_source(ride, &mut self.rng);
            let ctx = DispatchContext::new(avail.iter().map(|&i| FreeVehicle::from(&self.vehicles[i])).collect(), src);
            let ids: Vec<VehicleId> = ctx.vehicles.iter().map(|v| v.id).collect();
            let chosen = match self.dispatch {
                Dispatch::Balance => balance_choose(&ctx),
                Dispatch::Harmonic => harmonic_choose(&ctx, &mut self.rng),
                Dispatch::Wfa => {
                    let c = wfa_choose(&self.wfa, &ctx);
                    let (a, b) = ride_trips(ride);
                    let (order, _) = shared_route_from(self.vehicles[c.index()].pos, &a, b.as_ref());
                    let dst = *order.points(&a, &b.unwrap_or(a)).last().expect("non-empty route");
                    self.wfa.push(src, dst, ctx.vehicles.iter().map(|v| (v.id, v.pos)));
                    c
                }
                Dispatch::DoubleCoverage => {
                    let tree = self.tree.as_mut().expect("tree built for DC");
                    let leaf = tree.map.leaf_for(src);
                    dc_choose(&tree.map.tree, &mut tree.state, &ids, leaf).winner
                }
                Dispatch::KTaxi => {
                    let tree = self.tree.as_mut().expect("tree built for k-Taxi");
                    let leaf = tree.map.leaf_for(src);
                    ktaxi_choose(&tree.map.tree, &mut tree.state, &ids, leaf, &mut self.rng)
                }
                _ => unreachable!("offline dispatch"),
            };
            let vi = chosen.index();
            avail.retain(|&i| i != vi);
            out.push((k, vi));
        }
        out
    }

    /// Stops a relocation drive, logging the part already driven.
    fn interrupt(&mut self, i: usize, now: Stamp) {
        let m = &mut self.motion[i];
        if m.reloc.take().is_some() {
            if let Some(leg) = m.leg.take() {
                if leg.done > 0.0 {
                    let v = &self.vehicles[i];
                    self.log.push(
                        now,
                        EventKind::Segment {
                            vehicle: v.id,
                            from: leg.from,
                            to: v.pos,
                            meters: leg.done,
                        },
                    );
                }
            }
        }
    }

    fn assign(&mut self, rid: RideId, i: usize, now: Stamp) -> Result<(), EngineError> {
        self.interrupt(i, now);
        let (a, b) = ride_trips(&self.rides[rid.index()]);
        let v = &mut self.vehicles[i];
        let (order, meters) = shared_route_from(v.pos, &a, b.as_ref());
        let ride = &mut self.rides[rid.index()];
        ride.order = order.stops(ride.r1, &a, ride.r2, &b.unwrap_or(a));
        ride.assigned_vehicle = Some(v.id);
        v.itinerary = ride.order.iter().copied().collect();
        v.busy_until = now + meters / self.mpm;
        if let Some(d) = v.last_dropoff_t.take() {
            v.friction_accum_s += (now - d) * 60.0;
        }
        self.motion[i] = Motion {
            ride: Some(rid),
            order: Some(order),
            start: Some(v.pos),
            reloc: None,
            leg: None,
        };
        let (vid, from) = (v.id, v.pos);
        let members: Vec<RequestId> = ride.requests().collect();
        for r in members {
            self.step_request(r, LifecycleEvent::TaxiAssigned, now)?;
            self.log.push(
                now,
                EventKind::TaxiAssigned {
                    request: r,
                    vehicle: vid,
                    from,
                },
            );
        }
        Ok(())
    }

    fn relocate(&mut self, t: SimTime) {
        let Some(matcher) = self.cfg.relocation else {
            return;
        };
        let now = t.stamp();
        let idle: Vec<Vehicle> = (0..self.vehicles.len())
            .filter(|&i| self.is_free(i, now) && self.motion[i].reloc.is_none())
            .map(|i| self.vehicles[i].clone())
            .collect();
        if idle.is_empty() {
            return;
        }
        let start = Instant::now();
        // seeded per minute so relocation does not perturb the main stream
        let seed = mix(self.params.rng_seed, u64::from(t.minute()));
        let future = sample_future(&self.history, t, self.params.reloc_days, self.params.reloc_minutes, seed);
        let actives: Vec<Request> = self.active.iter().map(|id| self.requests[id.index()].clone()).collect();
        let moves = relocate(&idle, &actives, &future, matcher, mix(seed, 1));
        self.log.elapsed.add(Step::Relocation, nanos(start));
        for (vid, target) in moves {
            let i = vid.index();
            if manhattan_distance(self.vehicles[i].pos, target) > 0.0 {
                self.motion[i].reloc = Some(target);
                self.log.push(now, EventKind::RelocationStart { vehicle: vid, target });
            }
        }
    }

    fn advance_all(&mut self, now: Stamp) -> Result<(), EngineError> {
        let mut out = Vec::new();
        for i in 0..self.vehicles.len() {
            self.advance(i, now, &mut out)?;
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (t, kind) in out {
            self.log.push(t, kind);
        }
        Ok(())
    }

    /// One minute of driving for vehicle `i`.
    fn advance(&mut self, i: usize, now: Stamp, out: &mut Vec<(Stamp, EventKind)>) -> Result<(), EngineError> {
        let budget = self.mpm;
        let mut used = 0.0;
        loop {
            let target = match (self.vehicles[i].itinerary.front(), self.motion[i].reloc) {
                (Some(s), _) => s.point,
                (None, Some(p)) => p,
                (None, None) => break,
            };
            let pos = self.vehicles[i].pos;
            let leg = self.motion[i].leg.get_or_insert_with(|| Leg {
                from: pos,
                to: target,
                total: manhattan_distance(pos, target),
                done: 0.0,
            });
            let remaining = (leg.total - leg.done).max(0.0);
            let room = budget - used;
            if remaining > room + 1e-9 {
                leg.done += room;
                let p = move_along(leg.from, leg.to, leg.done);
                let v = &mut self.vehicles[i];
                v.odometer_m += room;
                v.pos = p;
                break;
            }
            let leg = self.motion[i].leg.take().expect("leg in progress");
            used = (used + remaining).min(budget);
            let at = now + used / budget;
            let v = &mut self.vehicles[i];
            v.odometer_m += remaining;
            v.pos = leg.to;
            if leg.total > 0.0 {
                out.push((
                    at,
                    EventKind::Segment {
                        vehicle: v.id,
                        from: leg.from,
                        to: leg.to,
                        meters: leg.total,
                    },
                ));
            }
            self.arrive(i, at, out)?;
        }
        Ok(())
    }

    fn arrive(&mut self, i: usize, at: Stamp, out: &mut Vec<(Stamp, EventKind)>) -> Result<(), EngineError> {
        let Some(stop) = self.vehicles[i].itinerary.pop_front() else {
            self.motion[i].reloc = None;
            return Ok(());
        };
        let vehicle = self.vehicles[i].id;
        let (ev, kind) = match stop.kind {
            StopKind::Pickup => (
                LifecycleEvent::PickedUp,
                EventKind::Pickup {
                    request: stop.request,
                    vehicle,
                    at: stop.point,
                },
            ),
            StopKind::Dropoff => (
                LifecycleEvent::DroppedOff,
                EventKind::Dropoff {
                    request: stop.request,
                    vehicle,
                    at: stop.point,
                },
            ),
        };
        self.step_request(stop.request, ev, at)?;
        out.push((at, kind));
        if self.vehicles[i].itinerary.is_empty() {
            let m = std::mem::take(&mut self.motion[i]);
            let ride = &self.rides[m.ride.expect("stop without a ride").index()];
            let v = &mut self.vehicles[i];
            v.earnings_usd += ride_revenue(
                ride,
                m.order.expect("assigned ride"),
                m.start.expect("assigned ride"),
                self.params,
            );
            v.busy_until = at;
            v.last_dropoff_t = Some(at);
            if let Some(tree) = self.tree.as_mut() {
                tree.state.place(v.id, tree.map.leaf_for(v.pos));
            }
        }
        Ok(())
    }

    /// Logs legs still being driven when the run ends.
    fn flush(&mut self, at: Stamp) {
        for i in 0..self.vehicles.len() {
            if let Some(leg) = self.motion[i].leg.take() {
                if leg.done > 0.0 {
                    let v = &self.vehicles[i];
                    self.log.push(
                        at,
                        EventKind::Segment {
                            vehicle: v.id,
                            from: leg.from,
                            to: v.pos,
                            meters: leg.done,
                        },
                    );
                }
            }
            self.motion[i].reloc = None;
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Offline {
    Mwm,
    Alma,
    Greedy,
    Random,
}

fn offline_kind(p: Pairing) -> Offline {
    match p {
        Pairing::Mwm => Offline::Mwm,
        Pairing::Alma => Offline::Alma,
        Pairing::Greedy => Offline::Greedy,
        Pairing::Random => Offline::Random,
        other => unreachable!("{other:?} is not an offline matcher"),
    }
}

fn run_offline(kind: Offline, g: &MatchGraph, seed: u64) -> Matching {
    match kind {
        Offline::Mwm => mwm(g),
        Offline::Alma => alma(g, AlmaConfig::default().max_rounds, seed),
        Offline::Greedy => greedy(g, seed),
        Offline::Random => random_match(g, seed),
    }
}

fn nanos(start: Instant) -> u64 {
    start.elapsed().as_nanos() as u64
}

/// SplitMix64 finalizer over two words.
fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Square street grid covering every point, coarsened if it would exceed
/// the node limit.
fn demand_grid(points: impl Iterator<Item = GeoPoint>, spacing_m: f64) -> StreetGraph {
    let (mut lo, mut hi) = (
        GeoPoint {
            lat: f64::INFINITY,
            lon: f64::INFINITY,
        },
        GeoPoint {
            lat: f64::NEG_INFINITY,
            lon: f64::NEG_INFINITY,
        },
    );
    for p in points {
        lo.lat = lo.lat.min(p.lat);
        lo.lon = lo.lon.min(p.lon);
        hi.lat = hi.lat.max(p.lat);
        hi.lon = hi.lon.max(p.lon);
    }
    let height = manhattan_distance(lo, GeoPoint { lat: hi.lat, lon: lo.lon });
    let width = manhattan_distance(lo, GeoPoint { lat: lo.lat, lon: hi.lon });
    let dims = |s: f64| ((height / s).ceil() as usize + 1, (width / s).ceil() as usize + 1);
    let mut spacing = spacing_m;
    while {
        let (r, c) = dims(spacing);
        r * c > MAX_GRID_NODES
    } {
        spacing *= 1.25;
    }
    let (rows, cols) = dims(spacing);
    StreetGraph::grid(lo, rows, cols, spacing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{check_run, Algorithm};
    use crate::geo::EARTH_RADIUS_M;
    use crate::ingest::{Hotspot, WorkloadSpec};

    fn p(x: f64, y: f64) -> GeoPoint {
        GeoPoint {
            lat: 40.75 + (y / EARTH_RADIUS_M).to_degrees(),
            lon: -73.98 + (x / (EARTH_RADIUS_M * 40.75f64.to_radians().cos())).to_degrees(),
        }
    }

    fn workload(rate: f64, minutes: u32) -> WorkloadSpec {
        WorkloadSpec {
            rate_per_min: rate,
            days: 2,
            start_minute: 480,
            duration_min: minutes,
            sources: vec![
                Hotspot {
                    lat: 40.75,
                    lon: -73.98,
                    weight: 1.0,
                },
                Hotspot {
                    lat: 40.78,
                    lon: -73.96,
                    weight: 1.0,
                },
            ],
            destinations: vec![],
            sigma_m: 800.0,
            shift_every_min: None,
            min_trip_m: 200.0,
        }
    }

    fn cfg(a: Algorithm) -> ScenarioConfig {
        let mut c = ScenarioConfig::new(a, workload(3.0, 30));
        c.params.rng_seed = 5;
        c
    }

    fn manual(reqs: Vec<Request>, history: Vec<Request>, t0: u32, end: u32) -> Scenario {
        Scenario {
            live: reqs,
            history,
            t0: SimTime(t0),
            end: SimTime(end),
        }
    }

    #[test]
    fn zero_requests() {
        let c = cfg(Algorithm::Mwm);
        let s = manual(vec![], vec![], 100, 110);
        let out = simulate(&c, &s).unwrap();
        assert!(out.log.is_empty());
        assert_eq!(out.fleet.len(), 0);
        assert_eq!(out.report.requests, 0);
    }

    #[test]
    fn single_request_with_taxi_at_source() {
        let mut c = cfg(Algorithm::Mwm);
        c.params.batch = crate::model::BatchMode::JustInTime;
        // the history places the only taxi at the live pickup
        let hist = vec![Request::new(RequestId(0), SimTime(50), p(-500.0, 0.0), p(0.0, 0.0), 1)];
        let live = vec![Request::new(RequestId(0), SimTime(100), p(0.0, 0.0), p(744.0, 0.0), 1)];
        let out = simulate(&c, &manual(live, hist, 100, 101)).unwrap();
        let r = &out.requests[0];
        assert_eq!(r.state, RequestState::Completed);
        // critical after one minute, then picked up on the spot
        assert_eq!(r.t_paired, Some(101.0));
        assert_eq!(r.t_taxi, Some(101.0));
        assert_eq!(r.t_pickup, Some(101.0));
        assert!((r.t_dest.unwrap() - 103.0).abs() < 1e-9);
        assert!((out.report.distance_driven_m - 744.0).abs() < 1e-6);
        assert!(check_run(&out).is_empty(), "{:?}", check_run(&out));
    }

    #[test]
    fn every_algorithm_serves_everyone() {
        for a in Algorithm::ALL {
            let mut c = cfg(a);
            c.audit = true;
            if a == Algorithm::Mwm {
                c.relocation = Some(crate::relocation::RelocMatcher::Mwm);
            }
            let out = super::super::run(&c).unwrap_or_else(|e| panic!("{a:?}: {e}"));
            let problems = check_run(&out);
            assert!(problems.is_empty(), "{a:?}: {problems:?}");
            assert!(out.audit.violations.is_empty(), "{a:?}: {:?}", out.audit.violations);
            assert!(out.requests.iter().all(|r| r.state == RequestState::Completed));
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        for a in [Algorithm::Alma, Algorithm::Har, Algorithm::Ktaxi, Algorithm::Pg] {
            let mut c = cfg(a);
            c.relocation = Some(crate::relocation::RelocMatcher::Greedy);
            let x = super::super::run(&c).unwrap();
            let y = super::super::run(&c).unwrap();
            assert_eq!(x.log.events, y.log.events, "{a:?}");
        }
    }

    #[test]
    fn single_never_shares() {
        let out = super::super::run(&cfg(Algorithm::Single)).unwrap();
        assert_eq!(out.report.shared_ride_count, 0);
        assert!(out.requests.iter().all(|r| r.t_paired == Some(r.t_open.stamp())));
    }

    #[test]
    fn grid_respects_node_limit() {
        let g = demand_grid([p(0.0, 0.0), p(50_000.0, 50_000.0)].into_iter(), 100.0);
        assert!(g.len() <= MAX_GRID_NODES);
        let g = demand_grid([p(0.0, 0.0), p(1000.0, 300.0)].into_iter(), 400.0);
        assert_eq!(g.len(), 2 * 4);
    }
}

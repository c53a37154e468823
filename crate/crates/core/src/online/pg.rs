//! Postponed Greedy: every request is both a virtual seller and a virtual
//! buyer until it turns critical, when a fair coin fixes its role.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::matchgraph::pairing_saving;
use crate::model::{RequestId, Trip};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PgDecision {
    /// `(request, partner)`.
    Pair(RequestId, RequestId),
    Single(RequestId),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PgState {
    /// Requests without a final decision yet.
    live: BTreeMap<RequestId, Trip>,
    /// Buyer to `(seller, weight)`, fixed at the buyer's arrival.
    pointer: BTreeMap<RequestId, (RequestId, f64)>,
    decided: BTreeSet<RequestId>,
    finalized: Vec<(RequestId, RequestId)>,
}

impl PgState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_live(&self, id: RequestId) -> bool {
        self.live.contains_key(&id)
    }

    pub fn pointer(&self, buyer: RequestId) -> Option<RequestId> {
        self.pointer.get(&buyer).map(|p| p.0)
    }

    pub fn finalized(&self) -> &[(RequestId, RequestId)] {
        &self.finalized
    }

    /// Registers a new request; its buyer points at the best live seller
    /// with a positive pairing weight, if there is one.
    pub fn on_arrival(&mut self, id: RequestId, trip: Trip) {
        debug_assert!(!self.live.contains_key(&id) && !self.decided.contains(&id));
        let mut best: Option<(RequestId, f64)> = None;
        for (&seller, other) in &self.live {
            let (_, w) = pairing_saving(&trip, other);
            if w > 0.0 && best.is_none_or(|(_, bw)| w > bw) {
                best = Some((seller, w));
            }
        }
        if let Some(p) = best {
            self.pointer.insert(id, p);
        }
        self.live.insert(id, trip);
    }

    /// Final decision for a request that just turned critical.
    pub fn on_critical<R: Rng + ?Sized>(&mut self, id: RequestId, rng: &mut R) -> PgDecision {
        let as_seller = rng.random_bool(0.5);
        self.decide(id, as_seller)
    }

    /// Decision with the role already fixed.
    pub fn decide(&mut self, id: RequestId, as_seller: bool) -> PgDecision {
        assert!(self.live.contains_key(&id), "request {id} already decided");
        let partner = if as_seller {
            self.pointer
                .iter()
                .filter(|(buyer, (seller, _))| *seller == id && self.live.contains_key(buyer))
                .fold(None::<(RequestId, f64)>, |best, (&buyer, &(_, w))| match best {
                    Some((_, bw)) if bw >= w => best,
                    _ => Some((buyer, w)),
                })
                .map(|(buyer, _)| buyer)
        } else {
            self.pointer
                .get(&id)
                .map(|&(seller, _)| seller)
                .filter(|seller| self.live.contains_key(seller))
        };
        self.close(id);
        match partner {
            Some(p) => {
                self.close(p);
                let pair = if as_seller { (id, p) } else { (p, id) };
                self.finalized.push(pair);
                PgDecision::Pair(id, p)
            }
            None => PgDecision::Single(id),
        }
    }

    /// Drops a request that was served some other way.
    pub fn close(&mut self, id: RequestId) {
        self.live.remove(&id);
        self.decided.insert(id);
    }
}

//! Ride-sharing dispatch simulation: request pairing, taxi dispatch and
//! fleet relocation.

pub mod engine;
pub mod geo;
pub mod hst;
pub mod ingest;
pub mod kserver;
pub mod matchgraph;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod online;
pub mod relocation;

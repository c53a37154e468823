//! Event-driven matchers for request pairing.

pub mod gd;
pub mod pg;

pub use gd::GdState;
pub use pg::{PgDecision, PgState};

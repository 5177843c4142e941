//! Exact bounds over deterministic strategies and the non-signaling polytope.

mod local;
mod lp;
mod nonsignaling;
mod restriction;
mod symmetry;

pub use local::{local_bound, DeterministicStrategy, LocalBound};
pub use nonsignaling::{nonsignaling_bound, nonsignaling_bound_family, NonSignalingBound};
pub use restriction::{enumerate_restrictions, OutcomeRestriction};
pub use symmetry::{dedup_restrictions, expression_symmetries, RestrictionClass, Symmetry};

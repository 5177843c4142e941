//! Projector words and moment-matrix relaxations of the quantum set,
//! optionally with at most `n` non-trivial effects per measurement.

mod moment;
mod restricted;
mod word;

pub use moment::{build_moment_sdp, generate_monomials, Level, MomentRelaxation};
pub use restricted::{restricted_bound, restricted_bound_with, RestrictedBound, RestrictionBound};
pub use word::{canonicalize, Letter, Monomial};

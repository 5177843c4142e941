//! Scenarios, correlation tables and Bell expressions.
//!
//! Settings and outcomes are 1-based throughout, matching the usual
//! `P_{μ,ν}(k,ℓ)` notation for joint outcome probabilities.

mod builders;
mod expr;
mod ops;
mod scenario;
mod table;

pub use builders::{cglmp_iprime, chsh_ch, named, vertesi_bene, NamedExpr};
pub use expr::{BellExpression, JointTerm, MarginalTerm};
pub use ops::{check_nonsignaling, merge_outcomes, relabel, NonSignalingCheck, PartySel, Relabeling};
pub use scenario::{Party, Scenario};
pub use table::CorrelationTable;

/// Tolerance on per-block normalization of correlation tables.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Entries above `-NEGATIVE_CLAMP` are clamped to zero on ingestion.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

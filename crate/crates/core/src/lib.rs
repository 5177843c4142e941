//! Bounds on bipartite Bell expressions under restricted measurement models.
//!
//! The crate computes, for a two-party Bell expression,
//!
//! * the local (deterministic-strategy) bound,
//! * the non-signaling bound, optionally with only `n` outcomes per setting
//!   allowed to occur,
//! * upper bounds on the quantum value from a moment-matrix relaxation, again
//!   optionally with at most `n` non-trivial effects per measurement,
//! * explicit quantum models from see-saw search (lower bounds), and
//! * white-noise visibility thresholds and count statistics.
//!
//! Everything here is `no_std` + `alloc`; file formats, parallel sweeps and the
//! command line live in the `polybell` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod bell;
mod error;
pub(crate) mod math;
pub mod model;
pub mod nc;
pub mod polytope;
pub mod sdp;

pub use crate::error::{Error, Result};

/// Optimization direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Max,
    Min,
}

impl Direction {
    /// `+1` for maximization, `-1` for minimization.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Max => 1.0,
            Direction::Min => -1.0,
        }
    }

    /// Whether `candidate` is strictly better than `incumbent`.
    pub fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Direction::Max => candidate > incumbent,
            Direction::Min => candidate < incumbent,
        }
    }

    pub fn worst(self) -> f64 {
        match self {
            Direction::Max => f64::NEG_INFINITY,
            Direction::Min => f64::INFINITY,
        }
    }
}

impl core::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Direction::Max),
            "min" => Ok(Direction::Min),
            other => Err(Error::invalid(alloc::format!("unknown direction `{other}`"))),
        }
    }
}

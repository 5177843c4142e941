//! Command line, file formats and parallel sweeps on top of `polybell-core`.
//!
//! The binary `polybell` exposes the subcommands `bound`, `seesaw`,
//! `visibility`, `evaluate`, `expr` and `sdp`; [`cli::run`] drives them
//! in-process and returns the exit code with the printed output.

pub mod cli;
mod error;
pub mod expressions;
pub mod io;
pub mod parallel;
pub mod report;
pub mod solver;

pub use error::{Error, Result};

use polybell_core::bell::BellExpression;
use polybell_core::nc::{generate_monomials, Level};
use polybell_core::polytope::enumerate_restrictions;

/// Largest moment matrix the dense interior-point back end is asked to
/// handle unless explicitly overridden.
pub const MAX_DENSE_DIM: usize = 300;

/// Next lower level: `k → k−1` down to 2, then `1+AB`, then 1.
pub fn lower_level(level: Level) -> Option<Level> {
    match level {
        Level::Words(k) if k > 2 => Some(Level::Words(k - 1)),
        Level::Words(2) => Some(Level::OnePlusAb),
        Level::OnePlusAb => Some(Level::Words(1)),
        Level::Words(_) => None,
    }
}

/// Moment-matrix size of the `n`-outcome relaxations at `level`.
pub fn relaxation_dim(expr: &BellExpression, n: usize, level: Level) -> Result<usize> {
    let restrictions = enumerate_restrictions(expr.scenario(), n)?;
    let first = restrictions.first().ok_or_else(|| Error::Usage("no restrictions".into()))?;
    Ok(generate_monomials(expr.scenario(), Some(first), level)?.len())
}

/// The requested level, or the highest lower one whose matrices fit in
/// `max_dim`; returns the level with its matrix size.
pub fn fit_level(expr: &BellExpression, n: usize, requested: Level, max_dim: usize) -> Result<(Level, usize)> {
    let mut level = requested;
    loop {
        let dim = relaxation_dim(expr, n, level)?;
        if dim <= max_dim {
            return Ok((level, dim));
        }
        match lower_level(level) {
            Some(l) => level = l,
            None => return Ok((level, dim)),
        }
    }
}

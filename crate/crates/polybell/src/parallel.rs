//! Rayon-backed versions of the restriction sweep and see-saw restarts.

use polybell_core::bell::BellExpression;
use polybell_core::model::{seesaw_with, SeesawOptions, SeesawResult};
use polybell_core::nc::{restricted_bound_with, Level, RestrictedBound};
use polybell_core::sdp::SdpSolver;
use polybell_core::Direction;
use rayon::prelude::*;

use crate::{Error, Result};

/// Thread pool of `jobs` workers, or one per available core.
pub fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let threads = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(Error::Usage("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start thread pool: {e}")))
}

pub fn restricted_bound(
    pool: &rayon::ThreadPool,
    expr: &BellExpression,
    n: usize,
    level: Level,
    direction: Direction,
    solver: &dyn SdpSolver,
    tol: Option<f64>,
) -> Result<RestrictedBound> {
    Ok(pool.install(|| {
        restricted_bound_with(expr, n, level, direction, solver, tol, |count, job| {
            (0..count).into_par_iter().map(job).collect()
        })
    })?)
}

pub fn seesaw(
    pool: &rayon::ThreadPool,
    expr: &BellExpression,
    opts: &SeesawOptions,
    solver: &dyn SdpSolver,
) -> Result<SeesawResult> {
    Ok(pool.install(|| seesaw_with(expr, opts, solver, |count, job| (0..count).into_par_iter().map(job).collect()))?)
}

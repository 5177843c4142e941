use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::moment::{build_moment_sdp, Level};
use crate::bell::BellExpression;
use crate::polytope::{dedup_restrictions, enumerate_restrictions, OutcomeRestriction};
use crate::sdp::{default_tolerance, SdpSolver, SolveStatus};
use crate::{Direction, Error, Result};

/// Relaxation bound for one class of equivalent restrictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictionBound {
    pub restriction: OutcomeRestriction,
    /// Restrictions sharing this bound by symmetry.
    pub members: usize,
    /// Objective at the solver's primal point.
    pub value: f64,
    /// Certified bound in the optimization direction (upper for max, lower for min).
    pub bound: f64,
    pub status: SolveStatus,
    pub dim: usize,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictedBound {
    pub n: usize,
    pub level: Level,
    pub direction: Direction,
    /// Optimum of `value` over restrictions.
    pub value: f64,
    /// Optimum of the certified bounds over restrictions.
    pub bound: f64,
    /// Index into `breakdown` attaining `value`.
    pub best: usize,
    /// Number of restrictions before symmetry reduction.
    pub restrictions: usize,
    pub breakdown: Vec<RestrictionBound>,
}

/// Relaxation bound over all `n`-outcome restrictions, solved one after another.
pub fn restricted_bound(
    expr: &BellExpression,
    n: usize,
    level: Level,
    direction: Direction,
    solver: &dyn SdpSolver,
    tol: Option<f64>,
) -> Result<RestrictedBound> {
    restricted_bound_with(expr, n, level, direction, solver, tol, |count, job| (0..count).map(job).collect())
}

/// As [`restricted_bound`], with `run(count, job)` evaluating `job(0..count)`
/// in any order or in parallel and returning the results by index.
pub fn restricted_bound_with<F>(
    expr: &BellExpression,
    n: usize,
    level: Level,
    direction: Direction,
    solver: &dyn SdpSolver,
    tol: Option<f64>,
    run: F,
) -> Result<RestrictedBound>
where
    F: FnOnce(usize, &(dyn Fn(usize) -> Result<RestrictionBound> + Sync)) -> Vec<Result<RestrictionBound>>,
{
    let restrictions = enumerate_restrictions(expr.scenario(), n)?;
    let classes = dedup_restrictions(expr, &restrictions);
    let target = match direction {
        Direction::Max => expr.clone(),
        Direction::Min => expr.negated(),
    };
    let sign = direction.sign();
    let job = |i: usize| -> Result<RestrictionBound> {
        let class = &classes[i];
        let rel = build_moment_sdp(&target, Some(&class.representative), level)?;
        let tol = tol.unwrap_or_else(|| default_tolerance(rel.problem.dim));
        let res = solver.solve(&rel.problem, tol)?;
        if !res.status.is_usable() {
            return Err(Error::Solver(format!(
                "restriction {:?}/{:?}: {:?} after {} iterations: {}",
                class.representative.supports(crate::bell::Party::A),
                class.representative.supports(crate::bell::Party::B),
                res.status,
                res.iterations,
                res.message
            )));
        }
        Ok(RestrictionBound {
            restriction: class.representative.clone(),
            members: class.members,
            value: sign * res.value,
            bound: sign * res.upper_bound,
            status: res.status,
            dim: rel.problem.dim,
            iterations: res.iterations,
        })
    };
    let results = run(classes.len(), &job);
    let breakdown = results.into_iter().collect::<Result<Vec<_>>>()?;
    if breakdown.len() != classes.len() {
        return Err(Error::Solver(format!("expected {} results, got {}", classes.len(), breakdown.len())));
    }
    let mut best = 0;
    for (i, b) in breakdown.iter().enumerate() {
        if direction.improves(b.value, breakdown[best].value) {
            best = i;
        }
    }
    let bound = breakdown.iter().map(|b| b.bound).fold(direction.worst(), |acc, v| {
        if direction.improves(v, acc) {
            v
        } else {
            acc
        }
    });
    Ok(RestrictedBound {
        n,
        level,
        direction,
        value: breakdown[best].value,
        bound,
        best,
        restrictions: restrictions.len(),
        breakdown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{chsh_ch, named};
    use crate::sdp::InteriorPoint;

    const I3_QUANTUM: f64 = 0.30495;
    const TWO_OUTCOME: f64 = 0.20711;

    #[test]
    fn i3_full_and_two_outcome() {
        let e = named("I3").unwrap();
        let ipm = InteriorPoint::default();
        let full = restricted_bound(&e, 3, Level::OnePlusAb, Direction::Max, &ipm, None).unwrap();
        assert_eq!(full.restrictions, 1);
        assert!((full.value - I3_QUANTUM).abs() < 1e-4, "{}", full.value);
        let two = restricted_bound(&e, 2, Level::OnePlusAb, Direction::Max, &ipm, None).unwrap();
        assert_eq!(two.restrictions, 81);
        assert!((two.value - TWO_OUTCOME).abs() < 1e-4, "{}", two.value);
        assert!(two.bound >= two.value - 1e-9);
        assert!(two.value < full.value);
    }

    #[test]
    fn level_monotone() {
        let e = named("I3").unwrap();
        let ipm = InteriorPoint::default();
        let mut prev = f64::INFINITY;
        for level in [Level::Words(1), Level::OnePlusAb, Level::Words(2)] {
            let b = restricted_bound(&e, 3, level, Direction::Max, &ipm, None).unwrap();
            assert!(b.value <= prev + 1e-6, "{level}: {} > {prev}", b.value);
            prev = b.value;
        }
    }

    #[test]
    fn min_by_negation() {
        // CH ranges over [−(1+√2)/2, (√2−1)/2] in quantum theory
        let e = chsh_ch().unwrap();
        let ipm = InteriorPoint::default();
        let lo = restricted_bound(&e, 2, Level::Words(1), Direction::Min, &ipm, None).unwrap();
        assert!((lo.value + (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-6, "{}", lo.value);
        assert!(lo.bound <= lo.value + 1e-9);
    }

    #[test]
    fn custom_runner_order_is_respected() {
        let e = named("I3").unwrap();
        let ipm = InteriorPoint::default();
        let seq = restricted_bound(&e, 2, Level::Words(1), Direction::Max, &ipm, None).unwrap();
        let rev = restricted_bound_with(&e, 2, Level::Words(1), Direction::Max, &ipm, None, |count, job| {
            let mut v: Vec<_> = (0..count).rev().map(|i| (i, job(i))).collect();
            v.sort_by_key(|(i, _)| *i);
            v.into_iter().map(|(_, r)| r).collect()
        })
        .unwrap();
        assert_eq!(seq, rev);
    }
}

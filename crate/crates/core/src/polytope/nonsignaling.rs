use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::lp::{maximize, LinearProgram, LpOutcome};
use super::OutcomeRestriction;
use crate::bell::{BellExpression, CorrelationTable, Party};
use crate::{Direction, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonSignalingBound {
    pub value: f64,
    /// An optimal non-signaling table.
    pub table: CorrelationTable,
    /// Index into the restriction family of the optimal member, if any.
    pub restriction_index: Option<usize>,
}

/// Exact optimum of the expression over the non-signaling polytope; outcomes
/// outside the restriction carry probability zero.
pub fn nonsignaling_bound(
    expr: &BellExpression,
    restriction: Option<&OutcomeRestriction>,
    direction: Direction,
) -> Result<NonSignalingBound> {
    let s = expr.scenario();
    let full;
    let restriction = match restriction {
        Some(r) => {
            if !r.fits(s) {
                return Err(Error::invalid("restriction does not fit the scenario"));
            }
            r
        }
        None => {
            full = OutcomeRestriction::full(s);
            &full
        }
    };
    let coeffs = expr.block_coefficients();
    let nb = s.settings(Party::B);

    // one variable per allowed cell
    let mut var = Vec::new();
    let mut cells = Vec::new();
    for (idx, (mu, nu, ra, rb)) in s.blocks().enumerate() {
        let mut block = vec![None; ra * rb];
        for &k in restriction.support(Party::A, mu) {
            for &l in restriction.support(Party::B, nu) {
                block[(k - 1) * rb + l - 1] = Some(cells.len());
                cells.push((idx, k, l));
            }
        }
        var.push(block);
    }
    let n = cells.len();
    let sign = direction.sign();
    let c: Vec<f64> = cells.iter().map(|&(idx, k, l)| {
        let rb = s.outcomes(Party::B, idx % nb + 1);
        sign * coeffs[idx][(k - 1) * rb + l - 1]
    }).collect();

    let mut a = Vec::new();
    let mut b = Vec::new();
    for block in &var {
        let mut row = vec![0.0; n];
        for v in block.iter().flatten() {
            row[*v] = 1.0;
        }
        a.push(row);
        b.push(1.0);
    }
    // Alice's marginal at (μ, k) equal across consecutive Bob settings
    for mu in 1..=s.settings(Party::A) {
        for &k in restriction.support(Party::A, mu) {
            for nu in 1..nb {
                let mut row = vec![0.0; n];
                for (sgn, nu2) in [(1.0, nu), (-1.0, nu + 1)] {
                    let rb = s.outcomes(Party::B, nu2);
                    for l in 1..=rb {
                        if let Some(v) = var[s.block_index(mu, nu2)][(k - 1) * rb + l - 1] {
                            row[v] += sgn;
                        }
                    }
                }
                a.push(row);
                b.push(0.0);
            }
        }
    }
    for nu in 1..=nb {
        let rb = s.outcomes(Party::B, nu);
        for &l in restriction.support(Party::B, nu) {
            for mu in 1..s.settings(Party::A) {
                let mut row = vec![0.0; n];
                for (sgn, mu2) in [(1.0, mu), (-1.0, mu + 1)] {
                    for k in 1..=s.outcomes(Party::A, mu2) {
                        if let Some(v) = var[s.block_index(mu2, nu)][(k - 1) * rb + l - 1] {
                            row[v] += sgn;
                        }
                    }
                }
                a.push(row);
                b.push(0.0);
            }
        }
    }

    match maximize(&LinearProgram { c, a, b }) {
        LpOutcome::Optimal { value, x } => {
            let value = expr.constant() + sign * value;
            let blocks = s
                .blocks()
                .enumerate()
                .map(|(idx, (_, _, ra, rb))| {
                    let mut blk: Vec<f64> = (0..ra * rb).map(|i| var[idx][i].map_or(0.0, |v| x[v])).collect();
                    // remove simplex round-off so the table validates
                    let total: f64 = blk.iter().sum();
                    blk.iter_mut().for_each(|p| *p /= total);
                    blk
                })
                .collect();
            let table = CorrelationTable::from_blocks(s.clone(), blocks)?;
            Ok(NonSignalingBound { value, table, restriction_index: None })
        }
        LpOutcome::Infeasible => Err(Error::Solver("non-signaling LP reported infeasible".into())),
        LpOutcome::Unbounded => Err(Error::Solver("non-signaling LP reported unbounded".into())),
    }
}

/// Optimum over a family of restrictions.
pub fn nonsignaling_bound_family(
    expr: &BellExpression,
    restrictions: &[OutcomeRestriction],
    direction: Direction,
) -> Result<NonSignalingBound> {
    let mut best: Option<NonSignalingBound> = None;
    for (i, r) in restrictions.iter().enumerate() {
        let mut nb = nonsignaling_bound(expr, Some(r), direction)
            .map_err(|e| Error::Solver(format!("restriction {i}: {e}")))?;
        if best.as_ref().is_none_or(|b| direction.improves(nb.value, b.value)) {
            nb.restriction_index = Some(i);
            best = Some(nb);
        }
    }
    best.ok_or_else(|| Error::invalid("empty restriction family"))
}

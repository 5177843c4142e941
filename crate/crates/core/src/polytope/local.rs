use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bell::{BellExpression, CorrelationTable, Party};
use crate::{Direction, Result};

/// One outcome per setting for each party (1-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn table(&self, expr: &BellExpression) -> Result<CorrelationTable> {
        CorrelationTable::deterministic(expr.scenario().clone(), &self.a, &self.b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalBound {
    pub value: f64,
    pub witness: DeterministicStrategy,
}

/// Exact optimum over all deterministic strategies.
///
/// Local models are mixtures of deterministic ones and the expression is
/// affine, so the enumeration is exhaustive.
pub fn local_bound(expr: &BellExpression, direction: Direction) -> LocalBound {
    let s = expr.scenario();
    let coeffs = expr.block_coefficients();
    let ra = s.outcome_counts(Party::A);
    let rb = s.outcome_counts(Party::B);
    let nb = rb.len();

    // Alice's choice is enumerated outermost; for a fixed Alice choice Bob's
    // settings decouple, so each Bob setting is optimized independently.
    let mut a = vec![1usize; ra.len()];
    let mut best: Option<LocalBound> = None;
    loop {
        let mut value = expr.constant();
        let mut b = Vec::with_capacity(nb);
        for (nu, &r) in rb.iter().enumerate() {
            let mut best_l = 1;
            let mut best_v = direction.worst();
            for l in 1..=r {
                let v: f64 = (0..ra.len()).map(|mu| coeffs[mu * nb + nu][(a[mu] - 1) * r + l - 1]).sum();
                if direction.improves(v, best_v) {
                    best_v = v;
                    best_l = l;
                }
            }
            value += best_v;
            b.push(best_l);
        }
        if best.as_ref().is_none_or(|cur| direction.improves(value, cur.value)) {
            best = Some(LocalBound { value, witness: DeterministicStrategy { a: a.clone(), b } });
        }
        if !advance(&mut a, ra) {
            break;
        }
    }
    best.expect("at least one strategy")
}

/// Odometer increment over 1-based digits; false once it wraps around.
pub(crate) fn advance(digits: &mut [usize], radix: &[usize]) -> bool {
    for (d, &r) in digits.iter_mut().zip(radix).rev() {
        if *d < r {
            *d += 1;
            return true;
        }
        *d = 1;
    }
    false
}

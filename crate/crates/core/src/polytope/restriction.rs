use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bell::{Party, Scenario};
use crate::{Error, Result};

/// For each setting, the outcomes allowed to be non-trivial, with at most
/// `n` per setting.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutcomeRestriction {
    n: usize,
    a: Vec<Vec<usize>>,
    b: Vec<Vec<usize>>,
}

impl OutcomeRestriction {
    /// Supports are sorted and deduplicated; each must satisfy `1 ≤ |S| ≤ min(n, r)`.
    pub fn new(scenario: &Scenario, n: usize, a: Vec<Vec<usize>>, b: Vec<Vec<usize>>) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("restriction needs n ≥ 1"));
        }
        let mut out = OutcomeRestriction { n, a, b };
        for party in [Party::A, Party::B] {
            let supports = match party {
                Party::A => &mut out.a,
                Party::B => &mut out.b,
            };
            if supports.len() != scenario.settings(party) {
                return Err(Error::invalid(format!("{party:?} needs one support per setting")));
            }
            for (i, sup) in supports.iter_mut().enumerate() {
                sup.sort_unstable();
                sup.dedup();
                let r = scenario.outcomes(party, i + 1);
                if sup.is_empty() {
                    return Err(Error::invalid(format!("{party:?} setting {} has an empty support", i + 1)));
                }
                if sup.len() > n.min(r) || sup.iter().any(|&k| k == 0 || k > r) {
                    return Err(Error::invalid(format!(
                        "{party:?} setting {} support {sup:?} invalid for n={n}, r={r}",
                        i + 1
                    )));
                }
            }
        }
        Ok(out)
    }

    /// Every outcome allowed.
    pub fn full(scenario: &Scenario) -> Self {
        let all = |counts: &[usize]| counts.iter().map(|&r| (1..=r).collect()).collect();
        OutcomeRestriction {
            n: scenario.max_outcomes(),
            a: all(scenario.a_outcomes()),
            b: all(scenario.b_outcomes()),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted support of a 1-based setting.
    pub fn support(&self, party: Party, setting: usize) -> &[usize] {
        match party {
            Party::A => &self.a[setting - 1],
            Party::B => &self.b[setting - 1],
        }
    }

    pub fn supports(&self, party: Party) -> &[Vec<usize>] {
        match party {
            Party::A => &self.a,
            Party::B => &self.b,
        }
    }

    pub fn allows(&self, party: Party, setting: usize, outcome: usize) -> bool {
        self.support(party, setting).binary_search(&outcome).is_ok()
    }

    /// Whether this restriction is compatible with `scenario`.
    pub fn fits(&self, scenario: &Scenario) -> bool {
        [Party::A, Party::B].into_iter().all(|p| {
            let sup = self.supports(p);
            sup.len() == scenario.settings(p)
                && sup.iter().enumerate().all(|(i, s)| {
                    let r = scenario.outcomes(p, i + 1);
                    !s.is_empty() && s.iter().all(|&k| k >= 1 && k <= r)
                })
        })
    }

    /// Whether no setting loses any outcome.
    pub fn is_full(&self, scenario: &Scenario) -> bool {
        [Party::A, Party::B].into_iter().all(|p| {
            self.supports(p).iter().enumerate().all(|(i, s)| s.len() == scenario.outcomes(p, i + 1))
        })
    }
}

/// All restrictions with maximal supports of size `min(n, r)` per setting.
///
/// Smaller supports are feasible points of a larger support's problem, so
/// they never change an optimum and are not emitted. Order is deterministic:
/// Alice's settings vary slowest, supports in lexicographic order.
pub fn enumerate_restrictions(scenario: &Scenario, n: usize) -> Result<Vec<OutcomeRestriction>> {
    if n < 1 {
        return Err(Error::invalid("restriction size n must be at least 1"));
    }
    let per_setting: Vec<Vec<Vec<usize>>> = scenario
        .a_outcomes()
        .iter()
        .chain(scenario.b_outcomes())
        .map(|&r| combinations(r, n.min(r)))
        .collect();
    let ma = scenario.settings(Party::A);
    let mut out = Vec::new();
    let mut idx = alloc::vec![0usize; per_setting.len()];
    loop {
        let pick: Vec<Vec<usize>> = idx.iter().zip(&per_setting).map(|(&i, c)| c[i].clone()).collect();
        let (a, b) = pick.split_at(ma);
        out.push(OutcomeRestriction { n, a: a.to_vec(), b: b.to_vec() });
        // odometer, last setting fastest
        let mut pos = idx.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < per_setting[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// `k`-subsets of `1..=r` in lexicographic order.
fn combinations(r: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (1..=k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < r - (k - 1 - i) {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::OutcomeRestriction;
use crate::bell::{BellExpression, Party};
use crate::math::abs;

/// Setting permutations per party together with per-setting outcome
/// permutations. All indices are 0-based: setting `μ` goes to
/// `a_settings[μ]` and its outcome `k` to `a_outcomes[μ][k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symmetry {
    pub a_settings: Vec<usize>,
    pub b_settings: Vec<usize>,
    pub a_outcomes: Vec<Vec<usize>>,
    pub b_outcomes: Vec<Vec<usize>>,
}

impl Symmetry {
    fn apply_masks(&self, masks: &[u64], ma: usize) -> Vec<u64> {
        let mut out = vec![0u64; masks.len()];
        for (i, &m) in masks.iter().enumerate() {
            let (target, perm) = if i < ma {
                (self.a_settings[i], &self.a_outcomes[i])
            } else {
                (ma + self.b_settings[i - ma], &self.b_outcomes[i - ma])
            };
            let mut image = 0u64;
            for (k, &pk) in perm.iter().enumerate() {
                if m & (1 << k) != 0 {
                    image |= 1 << pk;
                }
            }
            out[target] = image;
        }
        out
    }
}

/// Coefficients with marginals separated from joint terms; two expressions
/// with equal data agree on every non-signaling table.
struct Canonical {
    ra: Vec<usize>,
    rb: Vec<usize>,
    joint: Vec<Vec<f64>>,
    am: Vec<Vec<f64>>,
    bm: Vec<Vec<f64>>,
}

impl Canonical {
    fn new(expr: &BellExpression) -> Self {
        let s = expr.scenario();
        let ra = s.outcome_counts(Party::A).to_vec();
        let rb = s.outcome_counts(Party::B).to_vec();
        let mut joint: Vec<Vec<f64>> = s.blocks().map(|(_, _, a, b)| vec![0.0; a * b]).collect();
        for t in expr.joint_terms() {
            joint[(t.a_set - 1) * rb.len() + t.b_set - 1][(t.a_out - 1) * rb[t.b_set - 1] + t.b_out - 1] += t.coeff;
        }
        let mut am: Vec<Vec<f64>> = ra.iter().map(|&r| vec![0.0; r]).collect();
        for t in expr.a_marginal_terms() {
            am[t.set - 1][t.out - 1] += t.coeff;
        }
        let mut bm: Vec<Vec<f64>> = rb.iter().map(|&r| vec![0.0; r]).collect();
        for t in expr.b_marginal_terms() {
            bm[t.set - 1][t.out - 1] += t.coeff;
        }
        Canonical { ra, rb, joint, am, bm }
    }

    fn block_matches(&self, mu: usize, nu: usize, g: &Partial) -> bool {
        let (smu, pmu) = (g.a_set[mu], &g.a_out[mu]);
        let (snu, pnu) = (g.b_set[nu], &g.b_out[nu]);
        let nb = self.rb.len();
        let src = &self.joint[mu * nb + nu];
        let dst = &self.joint[smu * nb + snu];
        let rb = self.rb[nu];
        (0..self.ra[mu]).all(|k| (0..rb).all(|l| close(src[k * rb + l], dst[pmu[k] * rb + pnu[l]])))
    }
}

fn close(x: f64, y: f64) -> bool {
    abs(x - y) <= 1e-12 * (1.0 + abs(x).max(abs(y)))
}

struct Partial {
    a_set: Vec<usize>,
    b_set: Vec<usize>,
    a_out: Vec<Vec<usize>>,
    b_out: Vec<Vec<usize>>,
}

/// Enumerates every combination of setting and outcome permutations that
/// leaves the expression invariant on non-signaling correlations. The
/// identity is always first.
pub fn expression_symmetries(expr: &BellExpression) -> Vec<Symmetry> {
    let c = Canonical::new(expr);
    let ma = c.ra.len();
    let mb = c.rb.len();
    let mut found = Vec::new();
    for sa in permutations(ma) {
        if (0..ma).any(|i| c.ra[sa[i]] != c.ra[i]) {
            continue;
        }
        for sb in permutations(mb) {
            if (0..mb).any(|j| c.rb[sb[j]] != c.rb[j]) {
                continue;
            }
            let mut g = Partial {
                a_set: sa.clone(),
                b_set: sb.clone(),
                a_out: vec![Vec::new(); ma],
                b_out: vec![Vec::new(); mb],
            };
            // interleave A1, B1, A2, B2, ... so joint blocks are checked early
            let mut order = Vec::new();
            for i in 0..ma.max(mb) {
                if i < ma {
                    order.push((Party::A, i));
                }
                if i < mb {
                    order.push((Party::B, i));
                }
            }
            search(&c, &order, 0, &mut g, &mut found);
        }
    }
    // identity first
    if let Some(pos) = found.iter().position(is_identity) {
        found.swap(0, pos);
    }
    found
}

fn is_identity(s: &Symmetry) -> bool {
    let id = |v: &[usize]| v.iter().enumerate().all(|(i, &x)| i == x);
    id(&s.a_settings) && id(&s.b_settings) && s.a_outcomes.iter().chain(&s.b_outcomes).all(|p| id(p))
}

fn search(c: &Canonical, order: &[(Party, usize)], depth: usize, g: &mut Partial, found: &mut Vec<Symmetry>) {
    if depth == order.len() {
        found.push(Symmetry {
            a_settings: g.a_set.clone(),
            b_settings: g.b_set.clone(),
            a_outcomes: g.a_out.clone(),
            b_outcomes: g.b_out.clone(),
        });
        return;
    }
    let (party, i) = order[depth];
    let r = match party {
        Party::A => c.ra[i],
        Party::B => c.rb[i],
    };
    for perm in permutations(r) {
        let ok = match party {
            Party::A => {
                let tgt = g.a_set[i];
                (0..r).all(|k| close(c.am[i][k], c.am[tgt][perm[k]])) && {
                    g.a_out[i] = perm;
                    (0..c.rb.len()).filter(|&nu| !g.b_out[nu].is_empty()).all(|nu| c.block_matches(i, nu, g))
                }
            }
            Party::B => {
                let tgt = g.b_set[i];
                (0..r).all(|l| close(c.bm[i][l], c.bm[tgt][perm[l]])) && {
                    g.b_out[i] = perm;
                    (0..c.ra.len()).filter(|&mu| !g.a_out[mu].is_empty()).all(|mu| c.block_matches(mu, i, g))
                }
            }
        };
        if ok {
            search(c, order, depth + 1, g, found);
        }
        match party {
            Party::A => g.a_out[i].clear(),
            Party::B => g.b_out[i].clear(),
        }
    }
}

/// All permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// Restrictions related by a symmetry of the expression have equal bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictionClass {
    /// First member of the class in input order.
    pub representative: OutcomeRestriction,
    /// Number of input restrictions in the class.
    pub members: usize,
}

/// Groups restrictions into orbits under the expression's symmetries.
pub fn dedup_restrictions(expr: &BellExpression, restrictions: &[OutcomeRestriction]) -> Vec<RestrictionClass> {
    let group = expression_symmetries(expr);
    let ma = expr.scenario().settings(Party::A);
    let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    let mut classes: Vec<RestrictionClass> = Vec::new();
    for r in restrictions {
        let masks: Vec<u64> = r
            .supports(Party::A)
            .iter()
            .chain(r.supports(Party::B))
            .map(|s| s.iter().fold(0u64, |m, &k| m | (1 << (k - 1))))
            .collect();
        let key = group.iter().map(|g| g.apply_masks(&masks, ma)).min().unwrap_or(masks);
        match index.get(&key) {
            Some(&ci) => classes[ci].members += 1,
            None => {
                index.insert(key, classes.len());
                classes.push(RestrictionClass { representative: r.clone(), members: 1 });
            }
        }
    }
    classes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{named, Scenario};
    use crate::polytope::enumerate_restrictions;

    #[test]
    fn permutations_count() {
        assert_eq!(permutations(0).len(), 1);
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
    }

    /// Rewards equal outcomes on every setting pair.
    fn agreement(r: usize) -> BellExpression {
        let mut e = BellExpression::new(Scenario::uniform(2, r).unwrap());
        for mu in 1..=2 {
            for nu in 1..=2 {
                for k in 1..=r {
                    e.add_joint(mu, nu, k, k, 1.0).unwrap();
                }
            }
        }
        e
    }

    #[test]
    fn agreement_game_group() {
        let e = agreement(3);
        let group = expression_symmetries(&e);
        assert!(is_identity(&group[0]));
        // one common outcome permutation, times independent setting swaps
        assert_eq!(group.len(), 6 * 2 * 2);
        let c = Canonical::new(&e);
        for g in &group {
            let p = Partial {
                a_set: g.a_settings.clone(),
                b_set: g.b_settings.clone(),
                a_out: g.a_outcomes.clone(),
                b_out: g.b_outcomes.clone(),
            };
            for mu in 0..2 {
                for nu in 0..2 {
                    assert!(c.block_matches(mu, nu, &p));
                }
            }
        }
    }

    #[test]
    fn orbit_sizes_add_up() {
        let e = agreement(3);
        let all = enumerate_restrictions(e.scenario(), 2).unwrap();
        let classes = dedup_restrictions(&e, &all);
        assert_eq!(classes.iter().map(|c| c.members).sum::<usize>(), 81);
        assert!(classes.len() < 81);
        // I4 has no coefficient-exact symmetry beyond the identity
        let i4 = named("I4").unwrap();
        assert_eq!(expression_symmetries(&i4).len(), 1);
        let fam = enumerate_restrictions(i4.scenario(), 3).unwrap();
        assert_eq!(dedup_restrictions(&i4, &fam).len(), 256);
    }

    #[test]
    fn no_symmetry_means_singletons() {
        let mut e = BellExpression::new(Scenario::uniform(1, 3).unwrap());
        e.add_joint(1, 1, 1, 1, 1.0).unwrap();
        e.add_joint(1, 1, 2, 1, 2.0).unwrap();
        e.add_joint(1, 1, 3, 3, 5.0).unwrap();
        e.add_joint(1, 1, 1, 2, 7.0).unwrap();
        let all = enumerate_restrictions(e.scenario(), 2).unwrap();
        let classes = dedup_restrictions(&e, &all);
        assert_eq!(classes.len(), all.len());
    }
}

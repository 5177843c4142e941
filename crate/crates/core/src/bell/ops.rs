use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{CorrelationTable, Party, Scenario};
use crate::math::abs;
use crate::{Error, Result};

/// Per-setting outcome maps `λ'_μ`, `λ_ν` from a source scenario into a
/// target scenario. Maps need not be injective; non-injective maps merge mass.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relabeling {
    source: Scenario,
    target: Scenario,
    a: Vec<Vec<usize>>,
    b: Vec<Vec<usize>>,
}

impl Relabeling {
    /// `a[μ-1][k-1]` is the new label of Alice's outcome `k` at setting `μ`.
    pub fn new(source: Scenario, target: Scenario, a: Vec<Vec<usize>>, b: Vec<Vec<usize>>) -> Result<Self> {
        if source.settings(Party::A) != target.settings(Party::A)
            || source.settings(Party::B) != target.settings(Party::B)
        {
            return Err(Error::invalid("relabeling cannot change the number of settings"));
        }
        for (party, maps) in [(Party::A, &a), (Party::B, &b)] {
            if maps.len() != source.settings(party) {
                return Err(Error::invalid(format!("{party:?} needs one map per setting")));
            }
            for (i, map) in maps.iter().enumerate() {
                if map.len() != source.outcomes(party, i + 1) {
                    return Err(Error::invalid(format!(
                        "{party:?} setting {} map must cover every outcome label",
                        i + 1
                    )));
                }
                let r = target.outcomes(party, i + 1);
                if let Some(bad) = map.iter().find(|&&l| l == 0 || l > r) {
                    return Err(Error::invalid(format!(
                        "{party:?} setting {}: label {bad} outside 1..={r}",
                        i + 1
                    )));
                }
            }
        }
        Ok(Relabeling { source, target, a, b })
    }

    /// Maps within a fixed scenario.
    pub fn within(scenario: Scenario, a: Vec<Vec<usize>>, b: Vec<Vec<usize>>) -> Result<Self> {
        Relabeling::new(scenario.clone(), scenario, a, b)
    }

    pub fn identity(scenario: Scenario) -> Self {
        let a = scenario.a_outcomes().iter().map(|&r| (1..=r).collect()).collect();
        let b = scenario.b_outcomes().iter().map(|&r| (1..=r).collect()).collect();
        Relabeling { source: scenario.clone(), target: scenario, a, b }
    }

    pub fn source(&self) -> &Scenario {
        &self.source
    }

    pub fn target(&self) -> &Scenario {
        &self.target
    }

    /// New label of `outcome`.
    pub fn map(&self, party: Party, setting: usize, outcome: usize) -> usize {
        self.maps(party)[setting - 1][outcome - 1]
    }

    fn maps(&self, party: Party) -> &[Vec<usize>] {
        match party {
            Party::A => &self.a,
            Party::B => &self.b,
        }
    }

    /// Source labels mapped onto `outcome`.
    pub fn preimage(&self, party: Party, setting: usize, outcome: usize) -> Vec<usize> {
        self.maps(party)[setting - 1]
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == outcome)
            .map(|(k, _)| k + 1)
            .collect()
    }

    pub fn is_permutation(&self) -> bool {
        self.source == self.target
            && self.a.iter().chain(&self.b).all(|m| {
                let mut seen = vec![false; m.len()];
                m.iter().all(|&l| !core::mem::replace(&mut seen[l - 1], true))
            })
    }

    /// Inverse of a permutation relabeling.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_permutation() {
            return Err(Error::invalid("only permutations can be inverted"));
        }
        let inv = |maps: &[Vec<usize>]| -> Vec<Vec<usize>> {
            maps.iter()
                .map(|m| {
                    let mut out = vec![0; m.len()];
                    for (k, &l) in m.iter().enumerate() {
                        out[l - 1] = k + 1;
                    }
                    out
                })
                .collect()
        };
        Ok(Relabeling { source: self.target.clone(), target: self.source.clone(), a: inv(&self.a), b: inv(&self.b) })
    }
}

/// Transports probability mass along the outcome maps:
/// `P_{μ,ν}(k,ℓ) ↦ P_{μ,ν}(λ'_μ(k), λ_ν(ℓ))`, all other target cells zero.
pub fn relabel(table: &CorrelationTable, maps: &Relabeling) -> Result<CorrelationTable> {
    if table.scenario() != maps.source() {
        return Err(Error::invalid("table scenario differs from the relabeling source"));
    }
    let src = maps.source();
    let tgt = maps.target();
    let mut blocks: Vec<Vec<f64>> = tgt.blocks().map(|(_, _, ra, rb)| vec![0.0; ra * rb]).collect();
    for (idx, (mu, nu, ra, rb)) in src.blocks().enumerate() {
        let trb = tgt.outcomes(Party::B, nu);
        let block = &table.blocks()[idx];
        for k in 1..=ra {
            let nk = maps.map(Party::A, mu, k);
            for l in 1..=rb {
                let nl = maps.map(Party::B, nu, l);
                blocks[idx][(nk - 1) * trb + nl - 1] += block[(k - 1) * rb + l - 1];
            }
        }
    }
    CorrelationTable::from_blocks(tgt.clone(), blocks)
}

/// Which parties an operation applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartySel {
    A,
    B,
    Both,
}

impl PartySel {
    fn includes(self, party: Party) -> bool {
        matches!((self, party), (PartySel::Both, _) | (PartySel::A, Party::A) | (PartySel::B, Party::B))
    }
}

/// Adds the probabilities of outcome `from` into outcome `into` and removes
/// `from`, for every selected setting where both labels exist.
pub fn merge_outcomes(table: &CorrelationTable, party: PartySel, from: usize, into: usize) -> Result<CorrelationTable> {
    if from == into || from == 0 || into == 0 {
        return Err(Error::invalid(format!("cannot merge outcome {from} into {into}")));
    }
    let s = table.scenario();
    let top = from.max(into);
    let mut applies = false;
    let mut counts = [s.a_outcomes().to_vec(), s.b_outcomes().to_vec()];
    let mut maps: [Vec<Vec<usize>>; 2] = [Vec::new(), Vec::new()];
    for (pi, party_id) in [Party::A, Party::B].into_iter().enumerate() {
        for (i, &r) in s.outcome_counts(party_id).iter().enumerate() {
            let active = party.includes(party_id) && r >= top;
            applies |= active;
            let map = (1..=r)
                .map(|k| match (active, k) {
                    (false, _) => k,
                    (true, k) if k == from => {
                        if into > from {
                            into - 1
                        } else {
                            into
                        }
                    }
                    (true, k) if k > from => k - 1,
                    (true, k) => k,
                })
                .collect();
            if active {
                counts[pi][i] = r - 1;
            }
            maps[pi].push(map);
        }
    }
    if !applies {
        return Err(Error::invalid(format!("outcomes {from} and {into} do not both exist for the selected party")));
    }
    let [ca, cb] = counts;
    let [ma, mb] = maps;
    let target = Scenario::new(ca, cb)?;
    relabel(table, &Relabeling::new(s.clone(), target, ma, mb)?)
}

/// Result of a non-signaling check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonSignalingCheck {
    pub nonsignaling: bool,
    /// Largest deviation between marginals computed in different blocks.
    pub worst_deviation: f64,
}

/// Checks that Alice's marginals do not depend on Bob's setting and vice versa.
pub fn check_nonsignaling(table: &CorrelationTable, tol: f64) -> NonSignalingCheck {
    let s = table.scenario();
    let mut worst: f64 = 0.0;
    for (mu, &ra) in s.a_outcomes().iter().enumerate() {
        for k in 1..=ra {
            let reference = table.a_marginal(mu + 1, 1, k);
            for nu in 2..=s.settings(Party::B) {
                worst = worst.max(abs(table.a_marginal(mu + 1, nu, k) - reference));
            }
        }
    }
    for (nu, &rb) in s.b_outcomes().iter().enumerate() {
        for l in 1..=rb {
            let reference = table.b_marginal(nu + 1, 1, l);
            for mu in 2..=s.settings(Party::A) {
                worst = worst.max(abs(table.b_marginal(nu + 1, mu, l) - reference));
            }
        }
    }
    NonSignalingCheck { nonsignaling: worst <= tol, worst_deviation: worst }
}

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Party, Scenario, NEGATIVE_CLAMP, NORMALIZATION_TOL};
use crate::math::abs;
use crate::{Error, Result};

/// Joint outcome probabilities `P_{μ,ν}(k,ℓ)` for every setting pair.
///
/// Each `(μ, ν)` block is stored densely, row-major in `(k, ℓ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct CorrelationTable {
    scenario: Scenario,
    blocks: Vec<Vec<f64>>,
}

/// JSON shape: `p[μ][ν][k][ℓ]`, zero-based arrays mirroring the scenario.
#[derive(Serialize, Deserialize)]
struct RawTable {
    scenario: Scenario,
    p: Vec<Vec<Vec<Vec<f64>>>>,
}

impl TryFrom<RawTable> for CorrelationTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        let s = &raw.scenario;
        if raw.p.len() != s.a_outcomes().len() {
            return Err(Error::invalid("table rows do not match Alice's settings"));
        }
        let mut blocks = Vec::with_capacity(s.num_blocks());
        for (row, &ra) in raw.p.iter().zip(s.a_outcomes()) {
            if row.len() != s.b_outcomes().len() {
                return Err(Error::invalid("table columns do not match Bob's settings"));
            }
            for (block, &rb) in row.iter().zip(s.b_outcomes()) {
                if block.len() != ra || block.iter().any(|r| r.len() != rb) {
                    return Err(Error::invalid("block shape does not match outcome counts"));
                }
                blocks.push(block.iter().flatten().copied().collect());
            }
        }
        CorrelationTable::from_blocks(raw.scenario, blocks)
    }
}

impl From<CorrelationTable> for RawTable {
    fn from(t: CorrelationTable) -> Self {
        let p = (1..=t.scenario.settings(Party::A))
            .map(|mu| {
                (1..=t.scenario.settings(Party::B))
                    .map(|nu| {
                        let rb = t.scenario.outcomes(Party::B, nu);
                        t.block(mu, nu).chunks(rb).map(|c| c.to_vec()).collect()
                    })
                    .collect()
            })
            .collect();
        RawTable { scenario: t.scenario, p }
    }
}

impl CorrelationTable {
    /// Validates normalization and clamps tiny negative entries.
    pub fn from_blocks(scenario: Scenario, mut blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.len() != scenario.num_blocks() {
            return Err(Error::invalid("wrong number of setting-pair blocks"));
        }
        for ((mu, nu, ra, rb), block) in scenario.blocks().zip(blocks.iter_mut()) {
            if block.len() != ra * rb {
                return Err(Error::invalid(format!("block ({mu},{nu}) has wrong size")));
            }
            for p in block.iter_mut() {
                if !p.is_finite() || *p < -NEGATIVE_CLAMP {
                    return Err(Error::invalid(format!(
                        "block ({mu},{nu}) has invalid probability {p}"
                    )));
                }
                if *p < 0.0 {
                    *p = 0.0;
                }
            }
            let total: f64 = block.iter().sum();
            if abs(total - 1.0) > NORMALIZATION_TOL {
                return Err(Error::invalid(format!(
                    "block ({mu},{nu}) sums to {total}, expected 1"
                )));
            }
        }
        Ok(CorrelationTable { scenario, blocks })
    }

    /// Builds a table from `f(μ, ν, k, ℓ)` with 1-based arguments.
    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let blocks = scenario
            .blocks()
            .map(|(mu, nu, ra, rb)| {
                let mut b = Vec::with_capacity(ra * rb);
                for k in 1..=ra {
                    for l in 1..=rb {
                        b.push(f(mu, nu, k, l));
                    }
                }
                b
            })
            .collect();
        CorrelationTable::from_blocks(scenario, blocks)
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let blocks = scenario.blocks().map(|(_, _, ra, rb)| vec![1.0 / (ra * rb) as f64; ra * rb]).collect();
        CorrelationTable { scenario, blocks }
    }

    /// Product table of a deterministic strategy (1-based outcome choices).
    pub fn deterministic(scenario: Scenario, a_choice: &[usize], b_choice: &[usize]) -> Result<Self> {
        if a_choice.len() != scenario.settings(Party::A) || b_choice.len() != scenario.settings(Party::B) {
            return Err(Error::invalid("strategy does not cover every setting"));
        }
        for (i, &k) in a_choice.iter().enumerate() {
            scenario.check_outcome(Party::A, i + 1, k)?;
        }
        for (j, &l) in b_choice.iter().enumerate() {
            scenario.check_outcome(Party::B, j + 1, l)?;
        }
        CorrelationTable::from_fn(scenario, |mu, nu, k, l| {
            if a_choice[mu - 1] == k && b_choice[nu - 1] == l {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Row-major `(k, ℓ)` block for a setting pair.
    pub fn block(&self, a_set: usize, b_set: usize) -> &[f64] {
        &self.blocks[self.scenario.block_index(a_set, b_set)]
    }

    pub(crate) fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    /// `P_{μ,ν}(k,ℓ)`, all arguments 1-based.
    pub fn p(&self, a_set: usize, b_set: usize, a_out: usize, b_out: usize) -> f64 {
        let rb = self.scenario.outcomes(Party::B, b_set);
        self.block(a_set, b_set)[(a_out - 1) * rb + (b_out - 1)]
    }

    /// Alice's marginal `P_{μ,·}(k)` computed in the block with Bob's `partner` setting.
    pub fn a_marginal(&self, a_set: usize, partner: usize, a_out: usize) -> f64 {
        let rb = self.scenario.outcomes(Party::B, partner);
        self.block(a_set, partner)[(a_out - 1) * rb..a_out * rb].iter().sum()
    }

    /// Bob's marginal `P_{·,ν}(ℓ)` computed in the block with Alice's `partner` setting.
    pub fn b_marginal(&self, b_set: usize, partner: usize, b_out: usize) -> f64 {
        let rb = self.scenario.outcomes(Party::B, b_set);
        self.block(partner, b_set).iter().skip(b_out - 1).step_by(rb).sum()
    }

    /// Convex combination `weight·self + (1 − weight)·other`.
    pub fn mix(&self, weight: f64, other: &CorrelationTable) -> Result<Self> {
        if self.scenario != other.scenario {
            return Err(Error::invalid("scenario mismatch"));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::invalid("mixing weight must lie in [0, 1]"));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(x, y)| x.iter().zip(y).map(|(a, b)| weight * a + (1.0 - weight) * b).collect())
            .collect();
        Ok(CorrelationTable { scenario: self.scenario.clone(), blocks })
    }

    /// Largest absolute entry-wise difference; `None` on scenario mismatch.
    pub fn max_abs_diff(&self, other: &CorrelationTable) -> Option<f64> {
        if self.scenario != other.scenario {
            return None;
        }
        Some(
            self.blocks
                .iter()
                .flatten()
                .zip(other.blocks.iter().flatten())
                .map(|(a, b)| abs(a - b))
                .fold(0.0, f64::max),
        )
    }
}

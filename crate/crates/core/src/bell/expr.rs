use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{CorrelationTable, Party, Relabeling, Scenario};
use crate::{Error, Result};

/// Coefficient of a joint probability `P_{a_set,b_set}(a_out,b_out)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointTerm {
    pub a_set: usize,
    pub b_set: usize,
    pub a_out: usize,
    pub b_out: usize,
    pub coeff: f64,
}

/// Coefficient of a one-party marginal, evaluated in the block with the
/// other party's `partner` setting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalTerm {
    pub set: usize,
    pub out: usize,
    pub coeff: f64,
    #[serde(default = "first_setting")]
    pub partner: usize,
}

fn first_setting() -> usize {
    1
}

/// Sparse affine functional on correlation tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExpression")]
pub struct BellExpression {
    scenario: Scenario,
    constant: f64,
    joint: Vec<JointTerm>,
    a_marginal: Vec<MarginalTerm>,
    b_marginal: Vec<MarginalTerm>,
}

#[derive(Deserialize)]
struct RawExpression {
    scenario: Scenario,
    #[serde(default)]
    constant: f64,
    #[serde(default)]
    joint: Vec<JointTerm>,
    #[serde(default)]
    a_marginal: Vec<MarginalTerm>,
    #[serde(default)]
    b_marginal: Vec<MarginalTerm>,
}

impl TryFrom<RawExpression> for BellExpression {
    type Error = Error;

    fn try_from(raw: RawExpression) -> Result<Self> {
        let mut e = BellExpression::new(raw.scenario);
        e.add_constant(raw.constant);
        for t in raw.joint {
            e.add_joint(t.a_set, t.b_set, t.a_out, t.b_out, t.coeff)?;
        }
        for t in raw.a_marginal {
            e.add_a_marginal(t.set, t.out, t.coeff, t.partner)?;
        }
        for t in raw.b_marginal {
            e.add_b_marginal(t.set, t.out, t.coeff, t.partner)?;
        }
        Ok(e)
    }
}

impl BellExpression {
    /// The zero expression on `scenario`.
    pub fn new(scenario: Scenario) -> Self {
        BellExpression { scenario, constant: 0.0, joint: Vec::new(), a_marginal: Vec::new(), b_marginal: Vec::new() }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn joint_terms(&self) -> &[JointTerm] {
        &self.joint
    }

    pub fn a_marginal_terms(&self) -> &[MarginalTerm] {
        &self.a_marginal
    }

    pub fn b_marginal_terms(&self) -> &[MarginalTerm] {
        &self.b_marginal
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn add_joint(&mut self, a_set: usize, b_set: usize, a_out: usize, b_out: usize, coeff: f64) -> Result<&mut Self> {
        self.scenario.check_outcome(Party::A, a_set, a_out)?;
        self.scenario.check_outcome(Party::B, b_set, b_out)?;
        check_finite(coeff)?;
        self.joint.push(JointTerm { a_set, b_set, a_out, b_out, coeff });
        Ok(self)
    }

    pub fn add_a_marginal(&mut self, set: usize, out: usize, coeff: f64, partner: usize) -> Result<&mut Self> {
        self.scenario.check_outcome(Party::A, set, out)?;
        self.scenario.check_setting(Party::B, partner)?;
        check_finite(coeff)?;
        self.a_marginal.push(MarginalTerm { set, out, coeff, partner });
        Ok(self)
    }

    pub fn add_b_marginal(&mut self, set: usize, out: usize, coeff: f64, partner: usize) -> Result<&mut Self> {
        self.scenario.check_outcome(Party::B, set, out)?;
        self.scenario.check_setting(Party::A, partner)?;
        check_finite(coeff)?;
        self.b_marginal.push(MarginalTerm { set, out, coeff, partner });
        Ok(self)
    }

    /// `factor · self`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut e = self.clone();
        e.constant *= factor;
        e.joint.iter_mut().for_each(|t| t.coeff *= factor);
        e.a_marginal.iter_mut().for_each(|t| t.coeff *= factor);
        e.b_marginal.iter_mut().for_each(|t| t.coeff *= factor);
        e
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    /// Value of the expression on a correlation table.
    pub fn evaluate(&self, table: &CorrelationTable) -> Result<f64> {
        if table.scenario() != &self.scenario {
            return Err(Error::invalid("expression and table scenarios differ"));
        }
        let mut v = self.constant;
        for t in &self.joint {
            v += t.coeff * table.p(t.a_set, t.b_set, t.a_out, t.b_out);
        }
        for t in &self.a_marginal {
            v += t.coeff * table.a_marginal(t.set, t.partner, t.out);
        }
        for t in &self.b_marginal {
            v += t.coeff * table.b_marginal(t.set, t.partner, t.out);
        }
        Ok(v)
    }

    /// Net coefficient of every table entry, per setting-pair block, with
    /// marginal terms folded into their designated blocks.
    ///
    /// `evaluate(P) == constant + Σ block_coefficients · P` for every table.
    pub fn block_coefficients(&self) -> Vec<Vec<f64>> {
        let s = &self.scenario;
        let mut blocks: Vec<Vec<f64>> = s.blocks().map(|(_, _, ra, rb)| vec![0.0; ra * rb]).collect();
        for t in &self.joint {
            let rb = s.outcomes(Party::B, t.b_set);
            blocks[s.block_index(t.a_set, t.b_set)][(t.a_out - 1) * rb + t.b_out - 1] += t.coeff;
        }
        for t in &self.a_marginal {
            let rb = s.outcomes(Party::B, t.partner);
            let b = &mut blocks[s.block_index(t.set, t.partner)];
            for l in 0..rb {
                b[(t.out - 1) * rb + l] += t.coeff;
            }
        }
        for t in &self.b_marginal {
            let rb = s.outcomes(Party::B, t.set);
            let ra = s.outcomes(Party::A, t.partner);
            let b = &mut blocks[s.block_index(t.partner, t.set)];
            for k in 0..ra {
                b[k * rb + t.out - 1] += t.coeff;
            }
        }
        blocks
    }

    /// Setting pairs carrying at least one non-zero net coefficient.
    pub fn used_blocks(&self) -> Vec<(usize, usize)> {
        self.scenario
            .blocks()
            .zip(self.block_coefficients())
            .filter(|(_, c)| c.iter().any(|&x| x != 0.0))
            .map(|((mu, nu, _, _), _)| (mu, nu))
            .collect()
    }

    /// Pull-back along an outcome relabeling: the returned expression `E'`
    /// satisfies `E'(P) = E(relabel(P, maps))`.
    pub fn pull_back(&self, maps: &Relabeling) -> Result<Self> {
        if maps.target() != &self.scenario {
            return Err(Error::invalid("relabeling target differs from the expression scenario"));
        }
        let source = maps.source().clone();
        let mut e = BellExpression::new(source.clone());
        e.constant = self.constant;
        // A target cell collects every source cell mapped onto it.
        for t in &self.joint {
            for k in maps.preimage(Party::A, t.a_set, t.a_out) {
                for l in maps.preimage(Party::B, t.b_set, t.b_out) {
                    e.add_joint(t.a_set, t.b_set, k, l, t.coeff)?;
                }
            }
        }
        for t in &self.a_marginal {
            for k in maps.preimage(Party::A, t.set, t.out) {
                e.add_a_marginal(t.set, k, t.coeff, t.partner)?;
            }
        }
        for t in &self.b_marginal {
            for l in maps.preimage(Party::B, t.set, t.out) {
                e.add_b_marginal(t.set, l, t.coeff, t.partner)?;
            }
        }
        Ok(e)
    }

    /// Expression with the parties exchanged.
    pub fn swap_parties(&self) -> Self {
        BellExpression {
            scenario: self.scenario.swapped(),
            constant: self.constant,
            joint: self
                .joint
                .iter()
                .map(|t| JointTerm { a_set: t.b_set, b_set: t.a_set, a_out: t.b_out, b_out: t.a_out, coeff: t.coeff })
                .collect(),
            a_marginal: self.b_marginal.clone(),
            b_marginal: self.a_marginal.clone(),
        }
    }
}

fn check_finite(c: f64) -> Result<()> {
    if c.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("non-finite coefficient {c}")))
    }
}

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One of the two parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

/// Outcome counts of every measurement setting of both parties.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawScenario")]
pub struct Scenario {
    a_outcomes: Vec<usize>,
    b_outcomes: Vec<usize>,
}

#[derive(Deserialize)]
struct RawScenario {
    a_outcomes: Vec<usize>,
    b_outcomes: Vec<usize>,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;

    fn try_from(raw: RawScenario) -> Result<Self> {
        Scenario::new(raw.a_outcomes, raw.b_outcomes)
    }
}

impl Scenario {
    pub fn new(a_outcomes: Vec<usize>, b_outcomes: Vec<usize>) -> Result<Self> {
        if a_outcomes.is_empty() || b_outcomes.is_empty() {
            return Err(Error::invalid("each party needs at least one setting"));
        }
        if a_outcomes.iter().chain(&b_outcomes).any(|&r| r == 0) {
            return Err(Error::invalid("outcome counts must be at least 1"));
        }
        Ok(Scenario { a_outcomes, b_outcomes })
    }

    /// `settings` settings per party, all with `outcomes` outcomes.
    pub fn uniform(settings: usize, outcomes: usize) -> Result<Self> {
        Scenario::new(alloc::vec![outcomes; settings], alloc::vec![outcomes; settings])
    }

    pub fn a_outcomes(&self) -> &[usize] {
        &self.a_outcomes
    }

    pub fn b_outcomes(&self) -> &[usize] {
        &self.b_outcomes
    }

    pub fn outcome_counts(&self, party: Party) -> &[usize] {
        match party {
            Party::A => &self.a_outcomes,
            Party::B => &self.b_outcomes,
        }
    }

    pub fn settings(&self, party: Party) -> usize {
        self.outcome_counts(party).len()
    }

    /// Outcome count of a 1-based setting.
    pub fn outcomes(&self, party: Party, setting: usize) -> usize {
        self.outcome_counts(party)[setting - 1]
    }

    pub fn max_outcomes(&self) -> usize {
        self.a_outcomes.iter().chain(&self.b_outcomes).copied().max().unwrap_or(1)
    }

    pub(crate) fn check_setting(&self, party: Party, setting: usize) -> Result<()> {
        if setting == 0 || setting > self.settings(party) {
            return Err(Error::invalid(format!("{party:?} setting {setting} out of range")));
        }
        Ok(())
    }

    pub(crate) fn check_outcome(&self, party: Party, setting: usize, outcome: usize) -> Result<()> {
        self.check_setting(party, setting)?;
        if outcome == 0 || outcome > self.outcomes(party, setting) {
            return Err(Error::invalid(format!(
                "{party:?} outcome {outcome} out of range for setting {setting}"
            )));
        }
        Ok(())
    }

    /// Index of the `(μ, ν)` block in row-major setting order (1-based input).
    pub(crate) fn block_index(&self, a_set: usize, b_set: usize) -> usize {
        (a_set - 1) * self.b_outcomes.len() + (b_set - 1)
    }

    pub(crate) fn num_blocks(&self) -> usize {
        self.a_outcomes.len() * self.b_outcomes.len()
    }

    /// Iterates `(μ, ν, r_a, r_b)` over all setting pairs, 1-based.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        self.a_outcomes.iter().enumerate().flat_map(move |(i, &ra)| {
            self.b_outcomes.iter().enumerate().map(move |(j, &rb)| (i + 1, j + 1, ra, rb))
        })
    }

    /// Exchanges the roles of the parties.
    pub fn swapped(&self) -> Scenario {
        Scenario { a_outcomes: self.b_outcomes.clone(), b_outcomes: self.a_outcomes.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_zero() {
        assert!(Scenario::new(vec![], vec![2]).is_err());
        assert!(Scenario::new(vec![2, 0], vec![2]).is_err());
        assert!(Scenario::new(vec![1], vec![1]).is_ok());
    }

    #[test]
    fn json_validates() {
        let s: Scenario = serde_json::from_str(r#"{"a_outcomes":[3,3],"b_outcomes":[3,3]}"#).unwrap();
        assert_eq!(s, Scenario::uniform(2, 3).unwrap());
        assert!(serde_json::from_str::<Scenario>(r#"{"a_outcomes":[0],"b_outcomes":[3]}"#).is_err());
    }

    #[test]
    fn blocks_row_major() {
        let s = Scenario::new(vec![2, 2], vec![2, 2, 3]).unwrap();
        let blocks: Vec<_> = s.blocks().collect();
        assert_eq!(blocks.len(), 6);
        assert_eq!(blocks[2], (1, 3, 2, 3));
        assert_eq!(s.block_index(2, 3), 5);
    }
}

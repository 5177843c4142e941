use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::bell::Party;

/// A retained measurement projector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub party: Party,
    pub setting: usize,
    pub outcome: usize,
}

impl Letter {
    pub fn new(party: Party, setting: usize, outcome: usize) -> Self {
        Letter { party, setting, outcome }
    }

    pub fn a(setting: usize, outcome: usize) -> Self {
        Letter::new(Party::A, setting, outcome)
    }

    pub fn b(setting: usize, outcome: usize) -> Self {
        Letter::new(Party::B, setting, outcome)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({},{})", self.party, self.setting, self.outcome)
    }
}

/// Reduced product of projectors, Alice's letters first. The empty word is
/// the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial {
    letters: Vec<Letter>,
}

impl Monomial {
    pub fn identity() -> Self {
        Monomial::default()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Same as [`Monomial::is_identity`]: the empty word.
    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    fn split(&self) -> usize {
        self.letters.iter().position(|l| l.party == Party::B).unwrap_or(self.letters.len())
    }

    pub fn a_part(&self) -> &[Letter] {
        &self.letters[..self.split()]
    }

    pub fn b_part(&self) -> &[Letter] {
        &self.letters[self.split()..]
    }

    /// Word of the adjoint, which is again canonical.
    pub fn adjoint(&self) -> Monomial {
        let s = self.split();
        let mut letters: Vec<Letter> = self.letters[..s].iter().rev().copied().collect();
        letters.extend(self.letters[s..].iter().rev());
        Monomial { letters }
    }

    /// Representative of `{m, m†}`, the moments identified in a real relaxation.
    pub fn real_class(&self) -> Monomial {
        let adj = self.adjoint();
        if adj < *self {
            adj
        } else {
            self.clone()
        }
    }

    /// `self · other`, reduced.
    pub fn mul(&self, other: &Monomial) -> Option<Monomial> {
        let mut word = self.letters.clone();
        word.extend_from_slice(&other.letters);
        canonicalize(&word)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str("·")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Reduces a word of projectors: Alice's letters move before Bob's, equal
/// neighbours collapse, and neighbours from one setting with different
/// outcomes annihilate (`None`).
pub fn canonicalize(word: &[Letter]) -> Option<Monomial> {
    let mut letters: Vec<Letter> = Vec::with_capacity(word.len());
    for party in [Party::A, Party::B] {
        let start = letters.len();
        for &l in word.iter().filter(|l| l.party == party) {
            match letters[start..].last() {
                Some(top) if top.setting == l.setting => {
                    if top.outcome != l.outcome {
                        return None;
                    }
                }
                _ => letters.push(l),
            }
        }
    }
    Some(Monomial { letters })
}

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::word::{canonicalize, Letter, Monomial};
use crate::bell::{BellExpression, Party, Scenario};
use crate::polytope::OutcomeRestriction;
use crate::sdp::{Cell, SdpProblem};
use crate::{Error, Result};

/// Hierarchy level: all words up to a length, or level 1 plus Alice–Bob products.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "alloc::string::String", try_from = "alloc::string::String")]
pub enum Level {
    Words(usize),
    OnePlusAb,
}

impl Level {
    /// Level used when none is requested: 2 for the CGLMP family, 3 otherwise.
    pub fn default_for(name: &str) -> Level {
        match name.to_ascii_uppercase().as_str() {
            "I3" | "I4" | "CH" => Level::Words(2),
            _ => Level::Words(3),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Words(n) => write!(f, "{n}"),
            Level::OnePlusAb => f.write_str("1+AB"),
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("1+AB") {
            return Ok(Level::OnePlusAb);
        }
        match t.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Level::Words(n)),
            _ => Err(Error::invalid(format!("invalid level `{s}`; expected a positive integer or 1+AB"))),
        }
    }
}

impl From<Level> for alloc::string::String {
    fn from(l: Level) -> Self {
        l.to_string()
    }
}

impl TryFrom<alloc::string::String> for Level {
    type Error = Error;

    fn try_from(s: alloc::string::String) -> Result<Self> {
        s.parse()
    }
}

fn support_of<'a>(restriction: Option<&'a OutcomeRestriction>, all: &'a [Vec<usize>], party: Party, setting: usize) -> &'a [usize] {
    match restriction {
        Some(r) => r.support(party, setting),
        None => &all[setting - 1],
    }
}

struct Alphabet {
    a: Vec<Vec<usize>>,
    b: Vec<Vec<usize>>,
}

impl Alphabet {
    fn new(scenario: &Scenario, restriction: Option<&OutcomeRestriction>) -> Result<Self> {
        if let Some(r) = restriction {
            if !r.fits(scenario) {
                return Err(Error::invalid("restriction does not fit the scenario"));
            }
        }
        let full = |party: Party| -> Vec<Vec<usize>> {
            scenario.outcome_counts(party).iter().map(|&r| (1..=r).collect()).collect()
        };
        let (fa, fb) = (full(Party::A), full(Party::B));
        let pick = |party: Party, all: &[Vec<usize>]| -> Vec<Vec<usize>> {
            (1..=scenario.settings(party)).map(|s| support_of(restriction, all, party, s).to_vec()).collect()
        };
        Ok(Alphabet { a: pick(Party::A, &fa), b: pick(Party::B, &fb) })
    }

    fn support(&self, party: Party, setting: usize) -> &[usize] {
        match party {
            Party::A => &self.a[setting - 1],
            Party::B => &self.b[setting - 1],
        }
    }

    fn letters(&self, party: Party) -> Vec<Letter> {
        let sup = match party {
            Party::A => &self.a,
            Party::B => &self.b,
        };
        let mut out = Vec::new();
        for (i, s) in sup.iter().enumerate() {
            let kept = &s[..s.len() - 1];
            out.extend(kept.iter().map(|&k| Letter::new(party, i + 1, k)));
        }
        out
    }

    /// Effect of an outcome as a combination of the identity (`None`) and letters.
    fn effect(&self, party: Party, setting: usize, outcome: usize) -> Vec<(Option<Letter>, f64)> {
        let sup = self.support(party, setting);
        let Some(&last) = sup.last() else {
            return Vec::new();
        };
        if outcome == last {
            let mut v = vec![(None, 1.0)];
            v.extend(sup[..sup.len() - 1].iter().map(|&k| (Some(Letter::new(party, setting, k)), -1.0)));
            v
        } else if sup.contains(&outcome) {
            vec![(Some(Letter::new(party, setting, outcome)), 1.0)]
        } else {
            Vec::new()
        }
    }
}

fn sort_monomials(v: &mut Vec<Monomial>) {
    v.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
    v.dedup();
}

/// Identity plus every non-zero reduced word allowed by `level`, ordered by
/// length then lexicographically.
pub fn generate_monomials(
    scenario: &Scenario,
    restriction: Option<&OutcomeRestriction>,
    level: Level,
) -> Result<Vec<Monomial>> {
    let alpha = Alphabet::new(scenario, restriction)?;
    let la = alpha.letters(Party::A);
    let lb = alpha.letters(Party::B);
    let single = |l: &Letter| canonicalize(core::slice::from_ref(l)).expect("single letters are non-zero");
    let mut out = vec![Monomial::identity()];
    match level {
        Level::Words(0) => return Err(Error::invalid("level must be at least 1")),
        Level::Words(len) => {
            let all: Vec<Letter> = la.iter().chain(&lb).copied().collect();
            let mut frontier = vec![Monomial::identity()];
            let mut seen: alloc::collections::BTreeSet<Monomial> = frontier.iter().cloned().collect();
            for _ in 0..len {
                let mut next = Vec::new();
                for m in &frontier {
                    for l in &all {
                        if let Some(w) = m.mul(&single(l)) {
                            if seen.insert(w.clone()) {
                                next.push(w);
                            }
                        }
                    }
                }
                out.extend(next.iter().cloned());
                frontier = next;
            }
        }
        Level::OnePlusAb => {
            out.extend(la.iter().chain(&lb).map(single));
            for x in &la {
                for y in &lb {
                    out.push(canonicalize(&[*x, *y]).expect("different parties commute"));
                }
            }
        }
    }
    sort_monomials(&mut out);
    Ok(out)
}

/// A moment-matrix relaxation together with the bookkeeping needed to read
/// it back.
#[derive(Clone, Debug)]
pub struct MomentRelaxation {
    pub problem: SdpProblem,
    /// Row and column labels of the moment matrix.
    pub monomials: Vec<Monomial>,
    /// Moment class of each SDP variable.
    pub classes: Vec<Monomial>,
}

impl MomentRelaxation {
    /// Variable vector for a moment assignment, e.g. one computed from an
    /// explicit quantum model.
    pub fn assignment(&self, moment: impl Fn(&Monomial) -> f64) -> Vec<f64> {
        self.classes.iter().map(moment).collect()
    }

    pub fn variable_of(&self, m: &Monomial) -> Option<usize> {
        let key = m.real_class();
        self.classes.binary_search(&key).ok()
    }
}

/// Moment-matrix relaxation of `max expr` with outcomes confined to the
/// restriction's supports. The largest outcome of each support is eliminated
/// through completeness within the support.
pub fn build_moment_sdp(
    expr: &BellExpression,
    restriction: Option<&OutcomeRestriction>,
    level: Level,
) -> Result<MomentRelaxation> {
    let scenario = expr.scenario();
    let alpha = Alphabet::new(scenario, restriction)?;
    let monomials = generate_monomials(scenario, restriction, level)?;
    let n = monomials.len();

    let mut constant = Vec::new();
    let mut cells: BTreeMap<Monomial, Vec<Cell>> = BTreeMap::new();
    for (i, u) in monomials.iter().enumerate() {
        let ua = u.adjoint();
        for (j, v) in monomials.iter().enumerate().skip(i) {
            let Some(w) = ua.mul(v) else { continue };
            if w.is_identity() {
                constant.push(Cell::new(i, j, 1.0));
            } else {
                cells.entry(w.real_class()).or_default().push(Cell::new(i, j, 1.0));
            }
        }
    }
    let classes: Vec<Monomial> = cells.keys().cloned().collect();
    let variables: Vec<Vec<Cell>> = cells.into_values().collect();

    let mut objective = vec![0.0; classes.len()];
    let mut offset = expr.constant();
    let mut add = |a: Option<Letter>, b: Option<Letter>, c: f64| -> Result<()> {
        let word: Vec<Letter> = a.into_iter().chain(b).collect();
        let Some(m) = canonicalize(&word) else { return Ok(()) };
        if m.is_identity() {
            offset += c;
            return Ok(());
        }
        let idx = classes
            .binary_search(&m.real_class())
            .map_err(|_| Error::invalid(format!("moment {m} is not in the relaxation")))?;
        objective[idx] += c;
        Ok(())
    };
    for t in expr.joint_terms() {
        for (ea, ca) in alpha.effect(Party::A, t.a_set, t.a_out) {
            for (eb, cb) in alpha.effect(Party::B, t.b_set, t.b_out) {
                add(ea, eb, t.coeff * ca * cb)?;
            }
        }
    }
    for t in expr.a_marginal_terms() {
        for (ea, ca) in alpha.effect(Party::A, t.set, t.out) {
            add(ea, None, t.coeff * ca)?;
        }
    }
    for t in expr.b_marginal_terms() {
        for (eb, cb) in alpha.effect(Party::B, t.set, t.out) {
            add(None, eb, t.coeff * cb)?;
        }
    }

    let problem = SdpProblem {
        dim: n,
        constant,
        variables,
        objective,
        objective_offset: offset,
        var_bound: Some(1.0),
    };
    Ok(MomentRelaxation { problem, monomials, classes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{chsh_ch, named};
    use crate::polytope::enumerate_restrictions;
    use crate::sdp::{InteriorPoint, SdpSolver, SolveStatus};

    fn chsh() -> Scenario {
        Scenario::uniform(2, 2).unwrap()
    }

    #[test]
    fn level_parsing() {
        assert_eq!("1+AB".parse::<Level>().unwrap(), Level::OnePlusAb);
        assert_eq!("1+ab".parse::<Level>().unwrap(), Level::OnePlusAb);
        assert_eq!("3".parse::<Level>().unwrap(), Level::Words(3));
        assert!("0".parse::<Level>().is_err());
        assert!("two".parse::<Level>().is_err());
        assert_eq!(Level::OnePlusAb.to_string(), "1+AB");
        assert_eq!(Level::default_for("I4"), Level::Words(2));
        assert_eq!(Level::default_for("VBprime"), Level::Words(3));
        assert_eq!(Level::default_for("AN"), Level::Words(3));
    }

    #[test]
    fn chsh_monomial_counts() {
        let l1 = generate_monomials(&chsh(), None, Level::Words(1)).unwrap();
        assert_eq!(l1.len(), 5);
        assert!(l1[0].is_identity());
        assert_eq!(generate_monomials(&chsh(), None, Level::OnePlusAb).unwrap().len(), 9);
        // words of length 2: AA' twice, BB' twice, and four AB
        assert_eq!(generate_monomials(&chsh(), None, Level::Words(2)).unwrap().len(), 13);
    }

    #[test]
    fn restriction_acts_as_smaller_alphabet() {
        let s3 = Scenario::uniform(2, 3).unwrap();
        let s2 = Scenario::uniform(2, 2).unwrap();
        for level in [Level::Words(1), Level::Words(2), Level::OnePlusAb, Level::Words(3)] {
            let want = generate_monomials(&s2, None, level).unwrap().len();
            for r in enumerate_restrictions(&s3, 2).unwrap() {
                assert_eq!(generate_monomials(&s3, Some(&r), level).unwrap().len(), want);
            }
        }
    }

    #[test]
    fn larger_counts() {
        let i4 = Scenario::uniform(2, 4).unwrap();
        assert_eq!(generate_monomials(&i4, None, Level::Words(2)).unwrap().len(), 85);
        let r = enumerate_restrictions(&i4, 3).unwrap();
        assert_eq!(generate_monomials(&i4, Some(&r[0]), Level::Words(2)).unwrap().len(), 41);
        let vb = named("VBprime").unwrap();
        assert_eq!(generate_monomials(vb.scenario(), None, Level::Words(3)).unwrap().len(), 83);
    }

    #[test]
    fn ch_level_one() {
        let rel = build_moment_sdp(&chsh_ch().unwrap(), None, Level::Words(1)).unwrap();
        assert_eq!(rel.problem.dim, 5);
        // four single letters, four Alice–Bob products, A₁A₂ and B₁B₂
        assert_eq!(rel.problem.num_vars(), 10);
        assert_eq!(rel.problem.objective_offset, 0.0);
        assert_eq!(rel.problem.objective.iter().filter(|c| **c != 0.0).count(), 6);
        let r = InteriorPoint::default().solve(&rel.problem, 1e-8).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        let want = (2f64.sqrt() - 1.0) / 2.0;
        assert!((r.value - want).abs() < 1e-6, "{}", r.value);
        assert!(r.upper_bound >= want - 1e-9);
    }

    #[test]
    fn cells_are_consistent() {
        let e = named("I3").unwrap();
        let rel = build_moment_sdp(&e, None, Level::OnePlusAb).unwrap();
        let p = &rel.problem;
        let mut seen = vec![vec![0u32; p.dim]; p.dim];
        for c in p.constant.iter().chain(p.variables.iter().flatten()) {
            seen[c.row][c.col] += 1;
        }
        for (i, u) in rel.monomials.iter().enumerate() {
            for (j, v) in rel.monomials.iter().enumerate().skip(i) {
                let expect = u.adjoint().mul(v).map_or(0, |_| 1);
                assert_eq!(seen[i][j], expect, "{u} {v}");
            }
        }
        for (k, cells) in p.variables.iter().enumerate() {
            for c in cells {
                let w = rel.monomials[c.row].adjoint().mul(&rel.monomials[c.col]).unwrap();
                assert_eq!(w.real_class(), rel.classes[k]);
                assert_eq!(rel.variable_of(&w), Some(k));
            }
        }
    }

    #[test]
    fn empty_or_bad_restriction_rejected() {
        let e = named("I3").unwrap();
        let other = OutcomeRestriction::full(&Scenario::uniform(3, 3).unwrap());
        assert!(build_moment_sdp(&e, Some(&other), Level::Words(1)).is_err());
        assert!(generate_monomials(e.scenario(), None, Level::Words(0)).is_err());
    }
}

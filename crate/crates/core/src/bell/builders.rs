use alloc::format;

use serde::{Deserialize, Serialize};

use super::{BellExpression, Scenario};
use crate::math::sqrt;
use crate::{Error, Result};

/// The CGLMP combination in Zohren–Gill form with `r` outcomes per setting:
///
/// `I' = P_{2,2}(k<ℓ) + P_{1,2}(k>ℓ) + P_{1,1}(k<ℓ) + P_{2,1}(k≥ℓ)`.
///
/// Local models satisfy `I' ≥ 1`; quantum models approach 0.
pub fn cglmp_iprime(r: usize) -> Result<BellExpression> {
    if r < 1 {
        return Err(Error::invalid("CGLMP needs at least one outcome"));
    }
    let mut e = BellExpression::new(Scenario::uniform(2, r)?);
    for k in 1..=r {
        for l in 1..=r {
            if k < l {
                e.add_joint(2, 2, k, l, 1.0)?;
            }
        }
    }
    for k in 1..=r {
        for l in 1..=r {
            if k > l {
                e.add_joint(1, 2, k, l, 1.0)?;
            }
        }
    }
    for k in 1..=r {
        for l in 1..=r {
            if k < l {
                e.add_joint(1, 1, k, l, 1.0)?;
            }
        }
    }
    for k in 1..=r {
        for l in 1..=r {
            if k >= l {
                e.add_joint(2, 1, k, l, 1.0)?;
            }
        }
    }
    Ok(e)
}

/// `I_r = 1 − I'` with `r` outcomes.
fn one_minus_iprime(r: usize) -> Result<BellExpression> {
    let mut e = cglmp_iprime(r)?.negated();
    e.add_constant(1.0);
    Ok(e)
}

/// Adds `weight · I_CH` where
/// `I_CH = P_{1,1}(1,1) + P_{1,2}(1,1) + P_{2,1}(1,1) − P_{2,2}(1,1) − P_{1,·}(1) − P_{·,1}(1)`.
fn add_ch(e: &mut BellExpression, weight: f64) -> Result<()> {
    e.add_joint(1, 1, 1, 1, weight)?;
    e.add_joint(1, 2, 1, 1, weight)?;
    e.add_joint(2, 1, 1, 1, weight)?;
    e.add_joint(2, 2, 1, 1, -weight)?;
    e.add_a_marginal(1, 1, -weight, 1)?;
    e.add_b_marginal(1, 1, -weight, 1)?;
    Ok(())
}

/// Clauser–Horne expression on two dichotomic settings per party.
pub fn chsh_ch() -> Result<BellExpression> {
    let mut e = BellExpression::new(Scenario::uniform(2, 2)?);
    add_ch(&mut e, 1.0)?;
    Ok(e)
}

/// Vértesi–Bene type expression on Alice `[2,2]`, Bob `[2,2,3]`:
///
/// `−ξ P_{·,3}(1) − ζ P_{·,3}(2) − υ P_{1,·}(1) + P_{1,3}(1,1) + P_{1,3}(1,2)
///  + P_{2,3}(1,1) − P_{2,3}(1,2) + c·I_CH`.
///
/// Bob's setting-3 marginals are taken in the block with Alice's setting 1,
/// Alice's marginal in the block with Bob's setting 1.
pub fn vertesi_bene(c: f64, xi: f64, zeta: f64, upsilon: f64) -> Result<BellExpression> {
    let mut e = BellExpression::new(Scenario::new(alloc::vec![2, 2], alloc::vec![2, 2, 3])?);
    e.add_b_marginal(3, 1, -xi, 1)?;
    e.add_b_marginal(3, 2, -zeta, 1)?;
    if upsilon != 0.0 {
        e.add_a_marginal(1, 1, -upsilon, 1)?;
    }
    e.add_joint(1, 3, 1, 1, 1.0)?;
    e.add_joint(1, 3, 1, 2, 1.0)?;
    e.add_joint(2, 3, 1, 1, 1.0)?;
    e.add_joint(2, 3, 1, 2, -1.0)?;
    add_ch(&mut e, c)?;
    Ok(e)
}

/// Expressions available by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NamedExpr {
    I3,
    I4,
    #[serde(rename = "CH")]
    Ch,
    #[serde(rename = "VB")]
    Vb,
    #[serde(rename = "VBprime")]
    VbPrime,
}

impl NamedExpr {
    pub const ALL: [NamedExpr; 5] = [NamedExpr::I3, NamedExpr::I4, NamedExpr::Ch, NamedExpr::Vb, NamedExpr::VbPrime];

    pub fn as_str(self) -> &'static str {
        match self {
            NamedExpr::I3 => "I3",
            NamedExpr::I4 => "I4",
            NamedExpr::Ch => "CH",
            NamedExpr::Vb => "VB",
            NamedExpr::VbPrime => "VBprime",
        }
    }

    pub fn build(self) -> Result<BellExpression> {
        let inv_sqrt2 = 1.0 / sqrt(2.0);
        match self {
            NamedExpr::I3 => one_minus_iprime(3),
            NamedExpr::I4 => one_minus_iprime(4),
            NamedExpr::Ch => chsh_ch(),
            NamedExpr::Vb => vertesi_bene(100.0, 1.0, 1.0 - inv_sqrt2, 0.0),
            NamedExpr::VbPrime => vertesi_bene(3.52, 2.0 - inv_sqrt2, 1.0 - inv_sqrt2, 2.0 - sqrt(2.0)),
        }
    }
}

impl core::str::FromStr for NamedExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NamedExpr::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("VB'") && *n == NamedExpr::VbPrime))
            .ok_or_else(|| Error::invalid(format!("unknown expression `{s}`")))
    }
}

/// Builds a named expression (`I3`, `I4`, `CH`, `VB`, `VBprime`).
pub fn named(name: &str) -> Result<BellExpression> {
    name.parse::<NamedExpr>()?.build()
}

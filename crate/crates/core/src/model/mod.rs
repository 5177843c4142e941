//! Explicit quantum models (state and measurement effects) and see-saw search.

mod seesaw;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bell::{BellExpression, CorrelationTable, Party, Scenario};
use crate::math::abs;
use crate::polytope::OutcomeRestriction;
use crate::{Error, Result};

pub use seesaw::{seesaw, seesaw_with, SeesawOptions, SeesawResult};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Tolerance for the state and effect invariants.
pub const MODEL_TOL: f64 = 1e-9;

/// Bipartite density matrix plus one effect list per setting and party.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct QuantumModel {
    d_a: usize,
    d_b: usize,
    state: CMatrix,
    a_effects: Vec<Vec<CMatrix>>,
    b_effects: Vec<Vec<CMatrix>>,
    restriction: Option<OutcomeRestriction>,
}

/// Row-major `[re, im]` pairs.
type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Serialize, Deserialize)]
struct RawModel {
    d_a: usize,
    d_b: usize,
    state: RawMatrix,
    a_effects: Vec<Vec<RawMatrix>>,
    b_effects: Vec<Vec<RawMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    restriction: Option<OutcomeRestriction>,
}

fn to_raw(m: &CMatrix) -> RawMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn from_raw(raw: &RawMatrix) -> Result<CMatrix> {
    let n = raw.len();
    if n == 0 || raw.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidModel(format!("expected a non-empty square matrix, got {n} rows")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| C64::new(raw[i][j][0], raw[i][j][1])))
}

impl TryFrom<RawModel> for QuantumModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let conv = |sets: &Vec<Vec<RawMatrix>>| -> Result<Vec<Vec<CMatrix>>> {
            sets.iter().map(|s| s.iter().map(from_raw).collect()).collect()
        };
        QuantumModel::new(raw.d_a, raw.d_b, from_raw(&raw.state)?, conv(&raw.a_effects)?, conv(&raw.b_effects)?, raw.restriction)
    }
}

impl From<QuantumModel> for RawModel {
    fn from(m: QuantumModel) -> Self {
        let conv = |sets: &Vec<Vec<CMatrix>>| sets.iter().map(|s| s.iter().map(to_raw).collect()).collect();
        RawModel {
            d_a: m.d_a,
            d_b: m.d_b,
            state: to_raw(&m.state),
            a_effects: conv(&m.a_effects),
            b_effects: conv(&m.b_effects),
            restriction: m.restriction,
        }
    }
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).modulus());
        }
    }
    worst
}

pub(crate) fn min_eigenvalue(m: &CMatrix) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

impl QuantumModel {
    /// Checks every invariant: the state is a density matrix, effects are
    /// positive and complete per setting, and effects outside the
    /// restriction's supports vanish.
    pub fn new(
        d_a: usize,
        d_b: usize,
        state: CMatrix,
        a_effects: Vec<Vec<CMatrix>>,
        b_effects: Vec<Vec<CMatrix>>,
        restriction: Option<OutcomeRestriction>,
    ) -> Result<Self> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidModel(msg));
        if d_a == 0 || d_b == 0 {
            return bad("local dimensions must be positive".into());
        }
        let d = d_a * d_b;
        if state.nrows() != d || state.ncols() != d {
            return bad(format!("state must be {d}×{d}"));
        }
        if hermitian_defect(&state) > MODEL_TOL {
            return bad("state is not Hermitian".into());
        }
        let tr = state.trace();
        if abs(tr.re - 1.0) > MODEL_TOL || abs(tr.im) > MODEL_TOL {
            return bad(format!("state trace is {tr}, expected 1"));
        }
        if min_eigenvalue(&state) < -MODEL_TOL {
            return bad("state is not positive semidefinite".into());
        }
        if a_effects.is_empty() || b_effects.is_empty() {
            return bad("each party needs at least one setting".into());
        }
        for (party, sets, dim) in [(Party::A, &a_effects, d_a), (Party::B, &b_effects, d_b)] {
            for (s, effects) in sets.iter().enumerate() {
                if effects.is_empty() {
                    return bad(format!("{party:?} setting {} has no effects", s + 1));
                }
                let mut total = CMatrix::zeros(dim, dim);
                for (k, e) in effects.iter().enumerate() {
                    if e.nrows() != dim || e.ncols() != dim {
                        return bad(format!("{party:?} effect ({},{}) must be {dim}×{dim}", s + 1, k + 1));
                    }
                    if hermitian_defect(e) > MODEL_TOL {
                        return bad(format!("{party:?} effect ({},{}) is not Hermitian", s + 1, k + 1));
                    }
                    if min_eigenvalue(e) < -MODEL_TOL {
                        return bad(format!("{party:?} effect ({},{}) is not positive semidefinite", s + 1, k + 1));
                    }
                    if let Some(r) = &restriction {
                        if s < r.supports(party).len() && !r.allows(party, s + 1, k + 1) && e.iter().any(|z| *z != C64::new(0.0, 0.0)) {
                            return bad(format!("{party:?} effect ({},{}) lies outside the restriction", s + 1, k + 1));
                        }
                    }
                    total += e;
                }
                let defect = (total - CMatrix::identity(dim, dim)).iter().map(|z| z.modulus()).fold(0.0, f64::max);
                if defect > MODEL_TOL {
                    return bad(format!("{party:?} setting {} effects sum to identity only within {defect:e}", s + 1));
                }
            }
        }
        let model = QuantumModel { d_a, d_b, state, a_effects, b_effects, restriction };
        if let Some(r) = &model.restriction {
            if !r.fits(&model.scenario()) {
                return bad("restriction does not fit the model's scenario".into());
            }
        }
        Ok(model)
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn state(&self) -> &CMatrix {
        &self.state
    }

    pub fn effects(&self, party: Party) -> &[Vec<CMatrix>] {
        match party {
            Party::A => &self.a_effects,
            Party::B => &self.b_effects,
        }
    }

    pub fn restriction(&self) -> Option<&OutcomeRestriction> {
        self.restriction.as_ref()
    }

    /// Scenario read off the effect counts.
    pub fn scenario(&self) -> Scenario {
        let counts = |sets: &[Vec<CMatrix>]| sets.iter().map(Vec::len).collect();
        Scenario::new(counts(&self.a_effects), counts(&self.b_effects)).expect("validated on construction")
    }

    /// Bell operator `W` with `tr(ϱ W) = expr(correlations_of(ϱ, effects))`.
    pub fn bell_operator(&self, expr: &BellExpression) -> Result<CMatrix> {
        bell_operator(expr, &self.a_effects, &self.b_effects, self.d_a, self.d_b)
    }
}

pub(crate) fn bell_operator(
    expr: &BellExpression,
    a_effects: &[Vec<CMatrix>],
    b_effects: &[Vec<CMatrix>],
    d_a: usize,
    d_b: usize,
) -> Result<CMatrix> {
    let s = expr.scenario();
    let d = d_a * d_b;
    let mut w = CMatrix::identity(d, d) * C64::new(expr.constant(), 0.0);
    for ((mu, nu, ra, rb), coeffs) in s.blocks().zip(expr.block_coefficients()) {
        let (ea, eb) = (&a_effects[mu - 1], &b_effects[nu - 1]);
        if ea.len() != ra || eb.len() != rb {
            return Err(Error::invalid("model and expression scenarios differ"));
        }
        for k in 0..ra {
            // Σ_ℓ c_kℓ E_ℓ on Bob's side, then one Kronecker product
            let mut bob = CMatrix::zeros(d_b, d_b);
            let mut any = false;
            for l in 0..rb {
                let c = coeffs[k * rb + l];
                if c != 0.0 {
                    bob += &eb[l] * C64::new(c, 0.0);
                    any = true;
                }
            }
            if any {
                w += ea[k].kronecker(&bob);
            }
        }
    }
    Ok(w)
}

/// `P_{μ,ν}(k,ℓ) = tr(ϱ · E_k ⊗ E_ℓ)`.
pub fn correlations_of(model: &QuantumModel) -> Result<CorrelationTable> {
    let scenario = model.scenario();
    let (da, db) = (model.d_a, model.d_b);
    let rho = &model.state;
    let mut blocks = Vec::with_capacity(scenario.num_blocks());
    for (mu, nu, ra, rb) in scenario.blocks() {
        let mut block = vec![0.0; ra * rb];
        for (k, ea) in model.a_effects[mu - 1].iter().enumerate() {
            // σ[j, j'] = Σ_{i,i'} E[i', i] ϱ[(i, j), (i', j')], so P = tr(F σ)
            let mut sigma = CMatrix::zeros(db, db);
            for i in 0..da {
                for ip in 0..da {
                    let e = ea[(ip, i)];
                    if e == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for j in 0..db {
                        for jp in 0..db {
                            sigma[(j, jp)] += e * rho[(i * db + j, ip * db + jp)];
                        }
                    }
                }
            }
            for (l, eb) in model.b_effects[nu - 1].iter().enumerate() {
                let mut p = C64::new(0.0, 0.0);
                for j in 0..db {
                    for jp in 0..db {
                        p += eb[(jp, j)] * sigma[(j, jp)];
                    }
                }
                block[k * rb + l] = p.re.max(0.0);
            }
        }
        let total: f64 = block.iter().sum();
        if abs(total - 1.0) > 1e-6 {
            return Err(Error::InvalidModel(format!("block ({mu},{nu}) sums to {total}")));
        }
        block.iter_mut().for_each(|p| *p /= total);
        blocks.push(block);
    }
    CorrelationTable::from_blocks(scenario, blocks)
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<C64> {
    DVector::from_fn(n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub(crate) fn pure_state(psi: &DVector<C64>) -> CMatrix {
    let psi = psi / C64::new(psi.norm(), 0.0);
    &psi * psi.adjoint()
}

/// Random unitary from the QR decomposition of a complex Gaussian matrix.
fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    g.qr().q()
}

fn random_effects(rng: &mut ChaCha8Rng, d: usize, outcomes: usize, support: &[usize]) -> Vec<CMatrix> {
    let u = random_unitary(rng, d);
    let mut effects = vec![CMatrix::zeros(d, d); outcomes];
    for col in 0..d {
        let k = support[col % support.len()] - 1;
        let v = u.column(col);
        effects[k] += v * v.adjoint();
    }
    for e in &mut effects {
        symmetrize_hermitian(e);
    }
    effects
}

pub(crate) fn symmetrize_hermitian(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in i + 1..n {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
}

/// Reproducible random pure state with random projective measurements whose
/// basis vectors are dealt round-robin to the allowed outcomes.
pub fn random_model(
    scenario: &Scenario,
    d_a: usize,
    d_b: usize,
    restriction: Option<&OutcomeRestriction>,
    seed: u64,
) -> Result<QuantumModel> {
    if d_a == 0 || d_b == 0 {
        return Err(Error::invalid("local dimensions must be positive"));
    }
    let full = OutcomeRestriction::full(scenario);
    let r = restriction.unwrap_or(&full);
    if !r.fits(scenario) {
        return Err(Error::invalid("restriction does not fit the scenario"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = pure_state(&gaussian_vector(&mut rng, d_a * d_b));
    let mut sets = |party: Party, d: usize| -> Vec<Vec<CMatrix>> {
        (1..=scenario.settings(party))
            .map(|s| random_effects(&mut rng, d, scenario.outcomes(party, s), r.support(party, s)))
            .collect()
    };
    let a = sets(Party::A, d_a);
    let b = sets(Party::B, d_b);
    QuantumModel::new(d_a, d_b, state, a, b, restriction.cloned())
}

/// Partial trace against Bob: `F` with `tr(ϱ (E ⊗ G)) = tr(E F)` for all `E`.
pub(crate) fn reduce_to_a(rho: &CMatrix, g: &CMatrix, d_a: usize, d_b: usize) -> CMatrix {
    CMatrix::from_fn(d_a, d_a, |i, ip| {
        let mut s = C64::new(0.0, 0.0);
        for j in 0..d_b {
            for jp in 0..d_b {
                s += rho[(i * d_b + j, ip * d_b + jp)] * g[(jp, j)];
            }
        }
        s
    })
}

/// Partial trace against Alice: `H` with `tr(ϱ (E ⊗ G)) = tr(G H)` for all `G`.
pub(crate) fn reduce_to_b(rho: &CMatrix, e: &CMatrix, d_a: usize, d_b: usize) -> CMatrix {
    CMatrix::from_fn(d_b, d_b, |j, jp| {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..d_a {
            for ip in 0..d_a {
                s += rho[(i * d_b + j, ip * d_b + jp)] * e[(ip, i)];
            }
        }
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{check_nonsignaling, named};
    use crate::polytope::enumerate_restrictions;

    fn basis_projectors(d: usize) -> Vec<CMatrix> {
        (0..d)
            .map(|k| {
                let mut m = CMatrix::zeros(d, d);
                m[(k, k)] = C64::new(1.0, 0.0);
                m
            })
            .collect()
    }

    #[test]
    fn maximally_mixed_gives_uniform() {
        let r = 3;
        let d = r * r;
        let state = CMatrix::identity(d, d) / C64::new(d as f64, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = vec![basis_projectors(r), random_effects(&mut rng, r, r, &[1, 2, 3])];
        let b = vec![random_effects(&mut rng, r, r, &[1, 2, 3]), basis_projectors(r)];
        let m = QuantumModel::new(r, r, state, a, b, None).unwrap();
        let t = correlations_of(&m).unwrap();
        let u = CorrelationTable::uniform(m.scenario());
        assert!(t.max_abs_diff(&u).unwrap() < 1e-12);
    }

    #[test]
    fn eigenstate_is_deterministic() {
        let d = 2;
        let mut psi = DVector::zeros(d * d);
        psi[0] = C64::new(1.0, 0.0);
        let m = QuantumModel::new(d, d, pure_state(&psi), vec![basis_projectors(d); 2], vec![basis_projectors(d); 2], None)
            .unwrap();
        let t = correlations_of(&m).unwrap();
        let want = CorrelationTable::deterministic(m.scenario(), &[1, 1], &[1, 1]).unwrap();
        assert!(t.max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn direct_trace_oracle() {
        let s = Scenario::new(vec![3, 2], vec![2, 3, 3]).unwrap();
        let m = random_model(&s, 2, 3, None, 11).unwrap();
        let t = correlations_of(&m).unwrap();
        for (mu, nu, ra, rb) in s.blocks() {
            for k in 1..=ra {
                for l in 1..=rb {
                    let op = m.effects(Party::A)[mu - 1][k - 1].kronecker(&m.effects(Party::B)[nu - 1][l - 1]);
                    let p = (m.state() * op).trace().re;
                    assert!((t.p(mu, nu, k, l) - p).abs() < 1e-12);
                }
            }
        }
        assert!(check_nonsignaling(&t, 1e-10).nonsignaling);
    }

    #[test]
    fn bell_operator_matches_evaluation() {
        for name in ["I3", "VBprime", "CH"] {
            let e = named(name).unwrap();
            let d = e.scenario().max_outcomes();
            let m = random_model(e.scenario(), d, d, None, 3).unwrap();
            let w = m.bell_operator(&e).unwrap();
            let direct = e.evaluate(&correlations_of(&m).unwrap()).unwrap();
            assert!(((m.state() * w).trace().re - direct).abs() < 1e-10, "{name}");
        }
    }

    #[test]
    fn partial_traces() {
        let s = Scenario::uniform(1, 3).unwrap();
        let m = random_model(&s, 3, 2, None, 9).unwrap();
        let e = &m.effects(Party::A)[0][1];
        let g = &m.effects(Party::B)[0][2];
        let full = (m.state() * e.kronecker(g)).trace();
        assert!(((e * reduce_to_a(m.state(), g, 3, 2)).trace() - full).modulus() < 1e-12);
        assert!(((g * reduce_to_b(m.state(), e, 3, 2)).trace() - full).modulus() < 1e-12);
    }

    #[test]
    fn random_model_is_reproducible_and_restricted() {
        let s = Scenario::uniform(2, 3).unwrap();
        let r = enumerate_restrictions(&s, 2).unwrap();
        let a = random_model(&s, 3, 3, Some(&r[0]), 42).unwrap();
        let b = random_model(&s, 3, 3, Some(&r[0]), 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_model(&s, 3, 3, Some(&r[0]), 43).unwrap());
        // first restriction keeps outcomes {1, 2} everywhere
        for party in [Party::A, Party::B] {
            for effects in a.effects(party) {
                assert!(effects[2].iter().all(|z| *z == C64::new(0.0, 0.0)));
            }
        }
        let t = correlations_of(&a).unwrap();
        for (mu, nu, _, _) in s.blocks() {
            for x in 1..=3 {
                assert_eq!(t.p(mu, nu, 3, x), 0.0);
                assert_eq!(t.p(mu, nu, x, 3), 0.0);
            }
        }
    }

    #[test]
    fn invariants_rejected() {
        let d = 2;
        let rho = CMatrix::identity(4, 4) / C64::new(4.0, 0.0);
        let good = vec![basis_projectors(d)];
        assert!(QuantumModel::new(d, d, rho.clone() * C64::new(2.0, 0.0), good.clone(), good.clone(), None).is_err());
        let mut incomplete = basis_projectors(d);
        incomplete[1][(1, 1)] = C64::new(0.5, 0.0);
        assert!(QuantumModel::new(d, d, rho.clone(), vec![incomplete], good.clone(), None).is_err());
        let mut negative = basis_projectors(d);
        negative[0][(0, 0)] = C64::new(-0.5, 0.0);
        negative[1][(0, 0)] = C64::new(1.5, 0.0);
        assert!(QuantumModel::new(d, d, rho.clone(), vec![negative], good.clone(), None).is_err());
        assert!(QuantumModel::new(d, d, rho, good.clone(), good, None).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let s = Scenario::uniform(2, 2).unwrap();
        let m = random_model(&s, 2, 2, None, 1).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: QuantumModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}

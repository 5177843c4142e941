//! Alternating maximization over the state and each measurement.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::{
    bell_operator, correlations_of, min_eigenvalue, random_model, reduce_to_a, reduce_to_b, symmetrize_hermitian,
    CMatrix, QuantumModel, C64,
};
use crate::bell::{BellExpression, Party};
use crate::polytope::OutcomeRestriction;
use crate::sdp::{Cell, SdpProblem, SdpSolver};
use crate::{Direction, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawOptions {
    pub d_a: usize,
    pub d_b: usize,
    pub restriction: Option<OutcomeRestriction>,
    pub restarts: usize,
    pub seed: u64,
    pub direction: Direction,
    /// Stop once a full sweep gains less than this.
    pub gain_tol: f64,
    pub max_iter: usize,
    /// Accuracy of the measurement subproblems.
    pub sdp_tol: f64,
}

impl SeesawOptions {
    /// Local dimension equal to the largest outcome count, 10 restarts.
    pub fn for_expression(expr: &BellExpression) -> Self {
        let d = expr.scenario().max_outcomes().max(2);
        SeesawOptions {
            d_a: d,
            d_b: d,
            restriction: None,
            restarts: 10,
            seed: 0,
            direction: Direction::Max,
            gain_tol: 1e-9,
            max_iter: 500,
            sdp_tol: 1e-9,
        }
    }
}

/// One completed restart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawRun {
    pub model: QuantumModel,
    /// `expr` evaluated on the model's correlations.
    pub value: f64,
    /// Objective after the random start and after every state or
    /// measurement step; monotone in the optimization direction.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawResult {
    pub best: SeesawRun,
    /// Index of the best restart.
    pub restart: usize,
    /// Final value of every successful restart, by restart index.
    pub values: Vec<Option<f64>>,
    pub failures: Vec<String>,
}

const ATTEMPTS: u64 = 3;

fn restart_seed(seed: u64, restart: usize, attempt: u64) -> u64 {
    seed.wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(attempt.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Best of `opts.restarts` see-saw runs, solved one after another.
pub fn seesaw(expr: &BellExpression, opts: &SeesawOptions, solver: &dyn SdpSolver) -> Result<SeesawResult> {
    seesaw_with(expr, opts, solver, |count, job| (0..count).map(job).collect())
}

/// As [`seesaw`], with `run(count, job)` evaluating the restarts in any order.
pub fn seesaw_with<F>(expr: &BellExpression, opts: &SeesawOptions, solver: &dyn SdpSolver, run: F) -> Result<SeesawResult>
where
    F: FnOnce(usize, &(dyn Fn(usize) -> Result<SeesawRun> + Sync)) -> Vec<Result<SeesawRun>>,
{
    if opts.d_a < 2 || opts.d_b < 2 {
        return Err(Error::invalid("see-saw needs local dimensions of at least 2"));
    }
    if opts.restarts < 1 {
        return Err(Error::invalid("see-saw needs at least one restart"));
    }
    if let Some(r) = &opts.restriction {
        if !r.fits(expr.scenario()) {
            return Err(Error::invalid("restriction does not fit the scenario"));
        }
    }
    let job = |i: usize| -> Result<SeesawRun> {
        let mut last = Error::SearchFailed(String::from("no attempt made"));
        for attempt in 0..ATTEMPTS {
            match single_run(expr, opts, solver, restart_seed(opts.seed, i, attempt)) {
                Ok(run) => return Ok(run),
                Err(e) => last = e,
            }
        }
        Err(last)
    };
    let results = run(opts.restarts, &job);
    let mut best: Option<(usize, SeesawRun)> = None;
    let mut values = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(run) => {
                values.push(Some(run.value));
                if best.as_ref().is_none_or(|(_, b)| opts.direction.improves(run.value, b.value)) {
                    best = Some((i, run));
                }
            }
            Err(e) => {
                values.push(None);
                failures.push(format!("restart {i}: {e}"));
            }
        }
    }
    match best {
        Some((restart, best)) => Ok(SeesawResult { best, restart, values, failures }),
        None => Err(Error::SearchFailed(format!("all {} restarts failed: {}", opts.restarts, failures.join("; ")))),
    }
}

struct State<'a> {
    target: &'a BellExpression,
    coeffs: Vec<Vec<f64>>,
    d_a: usize,
    d_b: usize,
    rho: CMatrix,
    a: Vec<Vec<CMatrix>>,
    b: Vec<Vec<CMatrix>>,
}

impl State<'_> {
    fn value(&self) -> Result<f64> {
        let w = bell_operator(self.target, &self.a, &self.b, self.d_a, self.d_b)?;
        Ok((&self.rho * w).trace().re)
    }

    fn state_step(&mut self) -> Result<()> {
        let w = bell_operator(self.target, &self.a, &self.b, self.d_a, self.d_b)?;
        let eig = SymmetricEigen::new(w);
        let (top, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let psi = eig.eigenvectors.column(top).into_owned();
        self.rho = super::pure_state(&psi);
        Ok(())
    }

    /// Operators `F_k` with objective `Σ_k tr(E_k F_k) + const` for one setting.
    fn local_operators(&self, party: Party, setting: usize) -> Vec<CMatrix> {
        let s = self.target.scenario();
        match party {
            Party::A => {
                let ra = s.outcomes(Party::A, setting);
                (0..ra)
                    .map(|k| {
                        let mut g = CMatrix::zeros(self.d_b, self.d_b);
                        for nu in 1..=s.settings(Party::B) {
                            let rb = s.outcomes(Party::B, nu);
                            let c = &self.coeffs[s.block_index(setting, nu)];
                            for l in 0..rb {
                                if c[k * rb + l] != 0.0 {
                                    g += &self.b[nu - 1][l] * C64::new(c[k * rb + l], 0.0);
                                }
                            }
                        }
                        reduce_to_a(&self.rho, &g, self.d_a, self.d_b)
                    })
                    .collect()
            }
            Party::B => {
                let rb = s.outcomes(Party::B, setting);
                let mut out = vec![CMatrix::zeros(self.d_b, self.d_b); rb];
                for mu in 1..=s.settings(Party::A) {
                    let c = &self.coeffs[s.block_index(mu, setting)];
                    for (k, e) in self.a[mu - 1].iter().enumerate() {
                        if (0..rb).all(|l| c[k * rb + l] == 0.0) {
                            continue;
                        }
                        let h = reduce_to_b(&self.rho, e, self.d_a, self.d_b);
                        for (l, o) in out.iter_mut().enumerate() {
                            if c[k * rb + l] != 0.0 {
                                *o += &h * C64::new(c[k * rb + l], 0.0);
                            }
                        }
                    }
                }
                out
            }
        }
    }

    fn measurement_step(&mut self, party: Party, setting: usize, support: &[usize], solver: &dyn SdpSolver, tol: f64) -> Result<()> {
        let mut f = self.local_operators(party, setting);
        f.iter_mut().for_each(symmetrize_hermitian);
        let current = match party {
            Party::A => &self.a[setting - 1],
            Party::B => &self.b[setting - 1],
        };
        let d = current[0].nrows();
        let candidate = optimal_effects(&f, support, d, solver, tol)?;
        let score = |effects: &[CMatrix]| -> f64 { effects.iter().zip(&f).map(|(e, f)| (e * f).trace().re).sum() };
        if score(&candidate) > score(current) {
            match party {
                Party::A => self.a[setting - 1] = candidate,
                Party::B => self.b[setting - 1] = candidate,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Basis {
    Diag(usize),
    Re(usize, usize),
    Im(usize, usize),
}

fn hermitian_basis(d: usize) -> Vec<Basis> {
    let mut out: Vec<Basis> = (0..d).map(Basis::Diag).collect();
    for a in 0..d {
        for b in a + 1..d {
            out.push(Basis::Re(a, b));
            out.push(Basis::Im(a, b));
        }
    }
    out
}

/// Cells of a Hermitian basis element in the real embedding
/// `[[Re, −Im], [Im, Re]]` placed at `offset`.
fn embed(basis: Basis, d: usize, offset: usize, sign: f64, cells: &mut Vec<Cell>) {
    let o = offset;
    match basis {
        Basis::Diag(a) => {
            cells.push(Cell::new(o + a, o + a, sign));
            cells.push(Cell::new(o + d + a, o + d + a, sign));
        }
        Basis::Re(a, b) => {
            cells.push(Cell::new(o + a, o + b, sign));
            cells.push(Cell::new(o + d + a, o + d + b, sign));
        }
        Basis::Im(a, b) => {
            cells.push(Cell::new(o + a, o + d + b, -sign));
            cells.push(Cell::new(o + b, o + d + a, sign));
        }
    }
}

/// Effects on `support` maximizing `Σ_k tr(E_k F_k)` subject to positivity
/// and completeness; outcomes outside the support get the zero effect.
fn optimal_effects(f: &[CMatrix], support: &[usize], d: usize, solver: &dyn SdpSolver, tol: f64) -> Result<Vec<CMatrix>> {
    let mut effects = vec![CMatrix::zeros(d, d); f.len()];
    let (&last, free) = support.split_last().ok_or_else(|| Error::invalid("empty support"))?;
    if free.is_empty() {
        effects[last - 1] = CMatrix::identity(d, d);
        return Ok(effects);
    }
    let s = support.len();
    let block = 2 * d;
    let last_offset = (s - 1) * block;
    let basis = hermitian_basis(d);
    let mut variables = Vec::with_capacity(free.len() * basis.len());
    let mut objective = Vec::with_capacity(variables.capacity());
    for (t, &k) in free.iter().enumerate() {
        let diff = &f[k - 1] - &f[last - 1];
        for &b in &basis {
            let mut cells = Vec::with_capacity(4);
            embed(b, d, t * block, 1.0, &mut cells);
            embed(b, d, last_offset, -1.0, &mut cells);
            variables.push(cells);
            objective.push(match b {
                Basis::Diag(a) => diff[(a, a)].re,
                Basis::Re(a, c) => 2.0 * diff[(a, c)].re,
                Basis::Im(a, c) => 2.0 * diff[(a, c)].im,
            });
        }
    }
    let problem = SdpProblem {
        dim: s * block,
        constant: (0..block).map(|a| Cell::new(last_offset + a, last_offset + a, 1.0)).collect(),
        variables,
        objective,
        objective_offset: f[last - 1].trace().re,
        var_bound: Some(1.0),
    };
    let res = solver.solve(&problem, tol)?;
    if !res.status.is_usable() {
        return Err(Error::Solver(format!("measurement subproblem: {:?} {}", res.status, res.message)));
    }
    let mut rest = CMatrix::identity(d, d);
    for (t, &k) in free.iter().enumerate() {
        let y = &res.y[t * basis.len()..(t + 1) * basis.len()];
        let mut e = CMatrix::zeros(d, d);
        for (&b, &v) in basis.iter().zip(y) {
            match b {
                Basis::Diag(a) => e[(a, a)] = C64::new(v, 0.0),
                Basis::Re(a, c) => {
                    e[(a, c)].re = v;
                    e[(c, a)].re = v;
                }
                Basis::Im(a, c) => {
                    e[(a, c)].im = v;
                    e[(c, a)].im = -v;
                }
            }
        }
        rest -= &e;
        effects[k - 1] = e;
    }
    symmetrize_hermitian(&mut rest);
    effects[last - 1] = rest;
    // mix in a little of I/s if the solver left tiny negative eigenvalues
    let lmin = support.iter().map(|&k| min_eigenvalue(&effects[k - 1])).fold(f64::INFINITY, f64::min);
    if lmin < 0.0 {
        let share = 1.0 / s as f64;
        let eps = (-lmin / (share - lmin)) * (1.0 + 1e-9);
        for &k in support {
            let e = &effects[k - 1];
            effects[k - 1] = e * C64::new(1.0 - eps, 0.0) + CMatrix::identity(d, d) * C64::new(eps * share, 0.0);
        }
    }
    Ok(effects)
}

fn single_run(expr: &BellExpression, opts: &SeesawOptions, solver: &dyn SdpSolver, seed: u64) -> Result<SeesawRun> {
    let scenario = expr.scenario();
    let start = random_model(scenario, opts.d_a, opts.d_b, opts.restriction.as_ref(), seed)?;
    let target = match opts.direction {
        Direction::Max => expr.clone(),
        Direction::Min => expr.negated(),
    };
    let sign = opts.direction.sign();
    let full = OutcomeRestriction::full(scenario);
    let restriction = opts.restriction.as_ref().unwrap_or(&full);
    let mut st = State {
        target: &target,
        coeffs: target.block_coefficients(),
        d_a: opts.d_a,
        d_b: opts.d_b,
        rho: start.state().clone(),
        a: start.effects(Party::A).to_vec(),
        b: start.effects(Party::B).to_vec(),
    };
    let mut trace = vec![st.value()?];
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let before = *trace.last().expect("trace starts non-empty");
        st.state_step()?;
        trace.push(st.value()?);
        for party in [Party::A, Party::B] {
            for setting in 1..=scenario.settings(party) {
                st.measurement_step(party, setting, restriction.support(party, setting), solver, opts.sdp_tol)?;
                trace.push(st.value()?);
            }
        }
        if *trace.last().expect("non-empty") - before < opts.gain_tol {
            break;
        }
    }
    let model = QuantumModel::new(opts.d_a, opts.d_b, st.rho, st.a, st.b, opts.restriction.clone())?;
    let value = expr.evaluate(&correlations_of(&model)?)?;
    trace.iter_mut().for_each(|v| *v *= sign);
    Ok(SeesawRun { model, value, trace, iterations, seed })
}

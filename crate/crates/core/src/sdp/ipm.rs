//! Infeasible primal-dual interior-point method with the HKM search direction
//! and Mehrotra predictor-corrector steps, on dense matrices.
//!
//! Primal: maximize `b·y` s.t. `Z = F₀ + Σ yᵢ Aᵢ ⪰ 0`.
//! Dual:   minimize `⟨F₀, X⟩` s.t. `⟨Aᵢ, X⟩ = −bᵢ`, `X ⪰ 0`.
//! Weak duality gives `b·y ≤ ⟨F₀, X⟩` for every feasible pair.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::{check_tolerance, SdpProblem, SdpSolver, SolveResult, SolveStatus};
use crate::math::{abs, powf, sqrt};
use crate::Result;

/// Dense interior-point back end, suitable up to a few hundred rows and a
/// few thousand variables.
#[derive(Clone, Debug)]
pub struct InteriorPoint {
    pub max_iter: usize,
}

impl Default for InteriorPoint {
    fn default() -> Self {
        InteriorPoint { max_iter: 120 }
    }
}

/// Cells of one `Aᵢ` as `(row, col, w)` with `w = coeff` off the diagonal and
/// `coeff/2` on it, so that `⟨Aᵢ, Y⟩ = Σ w·(Y_rc + Y_cr)` for any `Y`.
type Weighted = Vec<(usize, usize, f64)>;

struct Workspace {
    n: usize,
    weighted: Vec<Weighted>,
    f0: DMatrix<f64>,
}

impl Workspace {
    fn new(problem: &SdpProblem) -> Self {
        let n = problem.dim;
        let weighted = problem
            .variables
            .iter()
            .map(|cells| {
                cells
                    .iter()
                    .map(|c| (c.row, c.col, if c.row == c.col { 0.5 * c.coeff } else { c.coeff }))
                    .collect()
            })
            .collect();
        let f0 = problem.matrix_at(&[]);
        Workspace { n, weighted, f0 }
    }

    /// `Σ yᵢ Aᵢ`
    fn adjoint(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (cells, &yi) in self.weighted.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for &(r, c, w) in cells {
                m[(r, c)] += w * yi;
                m[(c, r)] += w * yi;
            }
        }
        m
    }

    /// `⟨Aᵢ, Y⟩` for every i.
    fn apply(&self, y: &DMatrix<f64>) -> Vec<f64> {
        self.weighted
            .iter()
            .map(|cells| cells.iter().map(|&(r, c, w)| w * (y[(r, c)] + y[(c, r)])).sum())
            .collect()
    }

    /// Schur complement `H_ij = tr(Aᵢ Z⁻¹ Aⱼ X)`.
    fn schur(&self, zinv: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.weighted.len();
        let n = self.n;
        let zi = zinv.as_slice();
        let xs = x.as_slice();
        // both symmetric, so column-major indexing reads as row-major
        let at = |s: &[f64], r: usize, c: usize| s[r * n + c];
        let mut h = DMatrix::zeros(m, m);
        for i in 0..m {
            let ci = &self.weighted[i];
            for j in i..m {
                let cj = &self.weighted[j];
                let mut s = 0.0;
                for &(a, b, wp) in ci {
                    let mut inner = 0.0;
                    for &(c, d, wq) in cj {
                        inner += wq
                            * (at(zi, b, c) * at(xs, d, a)
                                + at(zi, b, d) * at(xs, c, a)
                                + at(zi, a, c) * at(xs, d, b)
                                + at(zi, a, d) * at(xs, c, b));
                    }
                    s += wp * inner;
                }
                h[(i, j)] = s;
                h[(j, i)] = s;
            }
        }
        h
    }
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Largest `α` with `M + α D ⪰ 0` (capped), given `M ≻ 0`.
fn max_step(chol: &Cholesky<f64, nalgebra::Dyn>, d: &DMatrix<f64>) -> f64 {
    let l = chol.l();
    let Some(w1) = l.solve_lower_triangular(d) else {
        return 0.0;
    };
    let Some(mut w) = l.solve_lower_triangular(&w1.transpose()) else {
        return 0.0;
    };
    symmetrize(&mut w);
    let lmin = SymmetricEigen::new(w).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if lmin >= 0.0 {
        1e30
    } else {
        -1.0 / lmin
    }
}

/// Shrinks `alpha` until `M + alpha D` factors, guarding against round-off
/// at the boundary.
fn backtrack(m: &DMatrix<f64>, d: &DMatrix<f64>, mut alpha: f64) -> f64 {
    for _ in 0..30 {
        if Cholesky::new(m + d * alpha).is_some() {
            return alpha;
        }
        alpha *= 0.7;
    }
    0.0
}

fn factor_schur(h: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let scale = h.diagonal().iter().copied().fold(0.0, f64::max).max(1e-300);
    let mut shift = 0.0;
    for _ in 0..6 {
        let mut hh = h.clone();
        for i in 0..hh.nrows() {
            hh[(i, i)] += shift;
        }
        if let Some(c) = Cholesky::new(hh) {
            return Some(c);
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 100.0 };
    }
    None
}

/// Iterations without a better merit before giving up.
const STALL_ITERATIONS: usize = 8;

#[derive(Clone)]
struct Iterate {
    x: DMatrix<f64>,
    y: Vec<f64>,
    z: DMatrix<f64>,
}

struct Measures {
    pobj: f64,
    dobj: f64,
    rel_gap: f64,
    pinf: f64,
    dinf: f64,
    rd_l1: f64,
}

impl SdpSolver for InteriorPoint {
    fn name(&self) -> &str {
        "ipm"
    }

    fn solve(&self, problem: &SdpProblem, tol: f64) -> Result<SolveResult> {
        problem.validate()?;
        check_tolerance(tol)?;
        let ws = Workspace::new(problem);
        let n = ws.n;
        let m = problem.num_vars();
        let b = &problem.objective;
        let norm_b = sqrt(b.iter().map(|x| x * x).sum());
        let norm_f0 = ws.f0.norm();
        let norm_a: Vec<f64> = ws
            .weighted
            .iter()
            .map(|cells| sqrt(cells.iter().map(|&(r, c, w)| if r == c { 4.0 * w * w } else { 2.0 * w * w }).sum()))
            .collect();

        let nf = n as f64;
        let xi_x = (0..m)
            .map(|i| nf * (1.0 + abs(b[i])) / (1.0 + norm_a[i]))
            .fold(10f64.max(sqrt(nf)), f64::max);
        let xi_z = norm_a.iter().copied().fold(10f64.max(sqrt(nf)).max(norm_f0), f64::max);
        let mut it = Iterate {
            x: DMatrix::identity(n, n) * xi_x,
            y: vec![0.0; m],
            z: DMatrix::identity(n, n) * xi_z,
        };

        let measure = |it: &Iterate| -> (Measures, DMatrix<f64>, Vec<f64>) {
            let rp = &ws.f0 + ws.adjoint(&it.y) - &it.z;
            let ax = ws.apply(&it.x);
            let rd: Vec<f64> = (0..m).map(|i| -b[i] - ax[i]).collect();
            let pobj: f64 = b.iter().zip(&it.y).map(|(b, y)| b * y).sum();
            let dobj = inner(&ws.f0, &it.x);
            let denom = 1.0 + abs(pobj) + abs(dobj);
            let compl = inner(&it.x, &it.z);
            let rel_gap = abs(dobj - pobj).max(compl) / denom;
            let pinf = rp.norm() / (1.0 + norm_f0);
            let rd_l1 = rd.iter().map(|x| abs(*x)).sum();
            let dinf = sqrt(rd.iter().map(|x| x * x).sum()) / (1.0 + norm_b);
            (Measures { pobj, dobj, rel_gap, pinf, dinf, rd_l1 }, rp, rd)
        };

        let mut status = SolveStatus::Failed;
        let mut message = String::new();
        let mut iterations = 0;
        let mut stalled = 0;
        let mut best: Option<(f64, Iterate)> = None;
        let mut since_best = 0;
        loop {
            let (ms, rp, rd) = measure(&it);
            let merit = ms.rel_gap.max(ms.pinf).max(ms.dinf);
            if best.as_ref().is_none_or(|(m, _)| merit < *m) {
                best = Some((merit, it.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= STALL_ITERATIONS {
                    message = format!("no progress in {STALL_ITERATIONS} iterations");
                    break;
                }
            }
            if ms.rel_gap < tol && ms.pinf < tol && ms.dinf < tol {
                status = SolveStatus::Optimal;
                break;
            }
            if iterations >= self.max_iter {
                message = format!("iteration limit {} reached", self.max_iter);
                break;
            }
            if !it.x.iter().chain(it.y.iter()).all(|v| v.is_finite())
                || it.y.iter().any(|v| abs(*v) > 1e12)
                || it.x.trace() > 1e15
            {
                status = SolveStatus::Infeasible;
                message = String::from("iterates diverged; problem looks infeasible or unbounded");
                break;
            }
            iterations += 1;

            let Some(chol_z) = Cholesky::new(it.z.clone()) else {
                message = String::from("lost positive definiteness of Z");
                break;
            };
            let Some(chol_x) = Cholesky::new(it.x.clone()) else {
                message = String::from("lost positive definiteness of X");
                break;
            };
            let mut zinv = chol_z.inverse();
            symmetrize(&mut zinv);
            let schur = ws.schur(&zinv, &it.x);
            let Some(h) = factor_schur(schur.clone()) else {
                message = String::from("Schur complement is singular");
                break;
            };
            let zinv_rp_x = &zinv * &rp * &it.x;
            let mu = inner(&it.x, &it.z) / nf;

            let direction = |g: &DMatrix<f64>| -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
                let ag = ws.apply(&(g - &zinv_rp_x));
                let rhs = DVector::from_iterator(m, (0..m).map(|i| ag[i] - rd[i]));
                let mut dy = h.solve(&rhs);
                // one round of iterative refinement
                let resid = &rhs - &schur * &dy;
                dy += h.solve(&resid);
                let dy: Vec<f64> = dy.iter().copied().collect();
                let dz = &rp + ws.adjoint(&dy);
                let mut dx = g - &zinv * &dz * &it.x;
                symmetrize(&mut dx);
                (dx, dy, dz)
            };

            // predictor
            let (dx_a, _, dz_a) = direction(&(-&it.x));
            let ap = max_step(&chol_x, &dx_a).min(1.0);
            let ad = max_step(&chol_z, &dz_a).min(1.0);
            let mu_aff = inner(&(&it.x + &dx_a * ap), &(&it.z + &dz_a * ad)) / nf;
            let sigma = powf((mu_aff / mu).clamp(0.0, 1.0), 3.0).clamp(0.0, 1.0);

            // corrector
            let g = &zinv * (sigma * mu) - &it.x - &zinv * &dz_a * &dx_a;
            let (dx, dy, dz) = direction(&g);
            let gamma = 0.9 + 0.09 * ap.min(ad);
            let ap = backtrack(&it.x, &dx, (gamma * max_step(&chol_x, &dx)).min(1.0));
            let ad = backtrack(&it.z, &dz, (gamma * max_step(&chol_z, &dz)).min(1.0));
            it.x += &dx * ap;
            it.z += &dz * ad;
            for (y, d) in it.y.iter_mut().zip(&dy) {
                *y += ad * d;
            }
            if ap < 1e-9 && ad < 1e-9 {
                stalled += 1;
                if stalled >= 3 {
                    message = String::from("step lengths collapsed");
                    break;
                }
            } else {
                stalled = 0;
            }
        }

        if status == SolveStatus::Failed {
            if let Some((_, b)) = best {
                it = b;
            }
        }
        let (ms, _, _) = measure(&it);
        if status == SolveStatus::Failed {
            let loose = sqrt(tol).max(1e-6);
            if ms.rel_gap < loose && ms.pinf < loose && ms.dinf < loose {
                status = SolveStatus::NearOptimal;
            }
        }
        let offset = problem.objective_offset;
        let upper_bound = match problem.var_bound {
            Some(bound) => ms.dobj + bound * ms.rd_l1,
            None => ms.dobj,
        } + offset;
        let matrix = problem.matrix_at(&it.y);
        Ok(SolveResult {
            status,
            value: ms.pobj + offset,
            dual_value: ms.dobj + offset,
            gap: ms.dobj - ms.pobj,
            upper_bound: upper_bound.max(ms.pobj + offset),
            primal_residual: ms.pinf,
            dual_residual: ms.dinf,
            iterations,
            y: it.y,
            matrix,
            message,
        })
    }
}

//! Dense two-phase simplex with Bland's rule for small equality-form LPs:
//! maximize `c·x` subject to `A x = b`, `x ≥ 0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::abs;

const PIVOT_TOL: f64 = 1e-11;

pub(crate) struct LinearProgram {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// reduced costs `c_j − c_B B⁻¹ A_j`
    reduced: Vec<f64>,
    value: f64,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for x in self.rows[r].iter_mut() {
            *x /= p;
        }
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][col];
            if f != 0.0 {
                for (x, &y) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
                self.rows[i][col] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = self.reduced[col];
        if f != 0.0 {
            for (x, &y) in self.reduced.iter_mut().zip(&pivot_row) {
                *x -= f * y;
            }
            self.reduced[col] = 0.0;
            self.value += f * pivot_rhs;
        }
        self.basis[r] = col;
    }

    /// Runs simplex iterations over columns `< allowed`; false if unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        loop {
            // Bland: lowest-index improving column
            let Some(col) = (0..allowed).find(|&j| self.reduced[j] > PIVOT_TOL) else {
                return true;
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i] / a;
                    let better = match best {
                        None => true,
                        Some((bi, br)) => {
                            ratio < br - 1e-13 || (abs(ratio - br) <= 1e-13 && self.basis[i] < self.basis[bi])
                        }
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, col),
                None => return false,
            }
        }
    }
}

pub(crate) fn maximize(lp: &LinearProgram) -> LpOutcome {
    let n = lp.c.len();
    let m = lp.b.len();
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (row, &bi) in lp.a.iter().zip(&lp.b) {
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        let mut r = vec![0.0; width];
        for (x, &y) in r.iter_mut().zip(row) {
            *x = sign * y;
        }
        rows.push(r);
        rhs.push(sign * bi);
    }
    for (i, r) in rows.iter_mut().enumerate() {
        r[n + i] = 1.0;
    }
    // phase 1: maximize −Σ artificials
    let mut reduced = vec![0.0; width];
    for r in &rows {
        for j in 0..n {
            reduced[j] += r[j];
        }
    }
    let mut t = Tableau { rows, rhs, basis: (n..n + m).collect(), reduced, value: 0.0 };
    t.value = -t.rhs.iter().sum::<f64>();
    t.optimize(width);
    let scale = 1.0 + lp.b.iter().map(|x| abs(*x)).sum::<f64>();
    if t.value < -1e-9 * scale {
        return LpOutcome::Infeasible;
    }
    // drive artificials out of the basis; drop redundant rows
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| abs(t.rows[i][j]) > 1e-9) {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }
    // phase 2
    let mut reduced = vec![0.0; width];
    reduced[..n].copy_from_slice(&lp.c);
    let mut value = 0.0;
    for (r, (&bj, &rhs)) in t.rows.iter().zip(t.basis.iter().zip(&t.rhs)) {
        let cb = lp.c[bj];
        if cb != 0.0 {
            for j in 0..n {
                reduced[j] -= cb * r[j];
            }
            value += cb * rhs;
        }
    }
    t.reduced = reduced;
    t.value = value;
    if !t.optimize(n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (&bj, &v) in t.basis.iter().zip(&t.rhs) {
        if bj < n {
            x[bj] = v.max(0.0);
        }
    }
    let value = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    LpOutcome::Optimal { value, x }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>) -> LinearProgram {
        LinearProgram { c, a, b }
    }

    #[test]
    fn simple_optimum() {
        // max x + 2y, x + y + s = 4, x + 3y + t = 6
        let p = lp(vec![1.0, 2.0, 0.0, 0.0], vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]], vec![4.0, 6.0]);
        match maximize(&p) {
            LpOutcome::Optimal { value, x } => {
                assert!((value - 5.0).abs() < 1e-12);
                assert!((x[0] - 3.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = lp(vec![1.0, 0.0], vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![1.0, 2.0]);
        assert_eq!(maximize(&p), LpOutcome::Infeasible);
        let p = lp(vec![1.0, 0.0], vec![vec![1.0, -1.0]], vec![1.0]);
        assert_eq!(maximize(&p), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_and_negative_rhs() {
        let p = lp(
            vec![1.0, -1.0, 0.0],
            vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], vec![-1.0, 0.0, 0.0]],
            vec![1.0, 2.0, -0.25],
        );
        match maximize(&p) {
            LpOutcome::Optimal { value, .. } => assert!((value - 0.25).abs() < 1e-12),
            o => panic!("{o:?}"),
        }
    }
}

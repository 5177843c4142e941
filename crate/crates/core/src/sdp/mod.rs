//! Semidefinite programs in linear-matrix-inequality form and a pluggable
//! solver interface.
//!
//! A problem maximizes `b·y + offset` subject to
//! `M(y) = F₀ + Σᵢ yᵢ Aᵢ ⪰ 0`, where `F₀` and every `Aᵢ` are sparse symmetric
//! matrices given by their upper-triangular cells.

mod ipm;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use ipm::InteriorPoint;

/// Upper-triangular entry of a symmetric matrix; `(row, col)` also fixes `(col, row)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub coeff: f64,
}

impl Cell {
    pub fn new(row: usize, col: usize, coeff: f64) -> Self {
        if row <= col {
            Cell { row, col, coeff }
        } else {
            Cell { row: col, col: row, coeff }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub dim: usize,
    /// Cells of `F₀` (fixed entries such as the normalization).
    pub constant: Vec<Cell>,
    /// Cells of each `Aᵢ`.
    pub variables: Vec<Vec<Cell>>,
    pub objective: Vec<f64>,
    #[serde(default)]
    pub objective_offset: f64,
    /// A priori bound `|yᵢ| ≤ B` on every feasible point; used to certify
    /// the upper bound when the dual iterate is slightly infeasible.
    #[serde(default)]
    pub var_bound: Option<f64>,
}

impl SdpProblem {
    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("SDP dimension must be positive"));
        }
        if self.objective.len() != self.variables.len() {
            return Err(Error::invalid("objective length differs from the number of variables"));
        }
        let check = |c: &Cell| c.row <= c.col && c.col < self.dim && c.coeff.is_finite();
        if !self.constant.iter().all(check) {
            return Err(Error::invalid("constant cell outside the upper triangle"));
        }
        for (i, cells) in self.variables.iter().enumerate() {
            if cells.is_empty() {
                return Err(Error::invalid(format!("variable {i} does not appear in the matrix")));
            }
            if !cells.iter().all(check) {
                return Err(Error::invalid(format!("variable {i} has a cell outside the upper triangle")));
            }
        }
        if !self.objective.iter().all(|x| x.is_finite()) || !self.objective_offset.is_finite() {
            return Err(Error::invalid("non-finite objective"));
        }
        Ok(())
    }

    /// Dense `F₀ + Σ yᵢ Aᵢ`.
    pub fn matrix_at(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut add = |c: &Cell, w: f64| {
            m[(c.row, c.col)] += w * c.coeff;
            if c.row != c.col {
                m[(c.col, c.row)] += w * c.coeff;
            }
        };
        for c in &self.constant {
            add(c, 1.0);
        }
        for (cells, &yi) in self.variables.iter().zip(y) {
            for c in cells {
                add(c, yi);
            }
        }
        m
    }

    pub fn objective_at(&self, y: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(y).map(|(b, y)| b * y).sum::<f64>()
    }

    /// The same feasible set with objective `−b·y − offset`.
    pub fn negated(&self) -> SdpProblem {
        let mut p = self.clone();
        p.objective.iter_mut().for_each(|b| *b = -*b);
        p.objective_offset = -p.objective_offset;
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Failed,
}

impl SolveStatus {
    /// Whether the reported values can be used as a bound.
    pub fn is_usable(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective at the returned point `y`.
    pub value: f64,
    /// Objective of the dual iterate.
    pub dual_value: f64,
    /// `dual_value − value`.
    pub gap: f64,
    /// `dual_value` corrected for dual infeasibility when the problem has a
    /// variable bound; a valid upper bound on the maximum.
    pub upper_bound: f64,
    /// Relative residuals.
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub y: Vec<f64>,
    /// `F₀ + Σ yᵢ Aᵢ` at the returned point.
    pub matrix: DMatrix<f64>,
    pub message: String,
}

/// A semidefinite-program back end. Implementations hold no mutable state
/// shared between calls.
pub trait SdpSolver: Sync {
    fn name(&self) -> &str;

    fn solve(&self, problem: &SdpProblem, tol: f64) -> Result<SolveResult>;
}

/// Default accuracy by matrix size.
pub fn default_tolerance(dim: usize) -> f64 {
    if dim < 200 {
        1e-8
    } else {
        1e-6
    }
}

pub(crate) fn check_tolerance(tol: f64) -> Result<()> {
    if (1e-10..=1e-4).contains(&tol) {
        Ok(())
    } else {
        Err(Error::invalid(format!("tolerance {tol} outside [1e-10, 1e-4]")))
    }
}

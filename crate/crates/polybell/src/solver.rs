//! Back-end selection and the file-based handoff to external programs.

use std::process::Command;

use polybell_core::sdp::{InteriorPoint, SdpProblem, SdpSolver, SolveResult};

use crate::io::{read_json, write_json, SolveReport};
use crate::{Error, Result};

/// Environment variable naming the SDP back end: `ipm` (default) or
/// `external:<program> [args…]`.
pub const SOLVER_ENV: &str = "POLYBELL_SOLVER";

/// Runs `<program> [args…] <problem.json> <result.json>` and reads a
/// [`SolveReport`] back.
#[derive(Clone, Debug)]
pub struct ExternalSolver {
    pub program: String,
    pub args: Vec<String>,
    name: String,
}

impl ExternalSolver {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        let program = program.into();
        let name = format!("external:{program}");
        ExternalSolver { program, args, name }
    }

    fn run(&self, problem: &SdpProblem, tol: f64) -> Result<SolveResult> {
        let dir = tempfile::tempdir()?;
        let input = dir.path().join("problem.json");
        let output = dir.path().join("result.json");
        write_json(&input, problem)?;
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg(&input)
            .arg(&output)
            .env("POLYBELL_TOL", tol.to_string())
            .output()
            .map_err(|e| Error::External(format!("cannot start `{}`: {e}", self.program)))?;
        if !out.status.success() {
            let stderr = String::from_utf8_lossy(&out.stderr);
            return Err(Error::External(format!("`{}` exited with {}: {}", self.program, out.status, stderr.trim())));
        }
        let rep: SolveReport = read_json(&output)?;
        if !rep.gap.is_finite() || rep.gap < 0.0 {
            return Err(Error::External(format!("invalid gap {}", rep.gap)));
        }
        let matrix = if rep.y.len() == problem.num_vars() {
            problem.matrix_at(&rep.y)
        } else {
            problem.matrix_at(&[])
        };
        let upper = rep.upper_bound.unwrap_or(rep.value + rep.gap).max(rep.value + rep.gap);
        Ok(SolveResult {
            status: rep.status,
            value: rep.value,
            dual_value: rep.dual_value.unwrap_or(rep.value + rep.gap),
            gap: rep.gap,
            upper_bound: upper,
            primal_residual: rep.primal_residual.unwrap_or(f64::NAN),
            dual_residual: rep.dual_residual.unwrap_or(f64::NAN),
            iterations: rep.iterations.unwrap_or(0),
            y: rep.y,
            matrix,
            message: rep.message,
        })
    }
}

impl SdpSolver for ExternalSolver {
    fn name(&self) -> &str {
        &self.name
    }

    fn solve(&self, problem: &SdpProblem, tol: f64) -> polybell_core::Result<SolveResult> {
        problem.validate()?;
        self.run(problem, tol).map_err(|e| polybell_core::Error::Solver(e.to_string()))
    }
}

/// Parses a back-end name: `ipm` or `external:<program> [args…]`.
pub fn parse_solver(value: &str) -> Result<Box<dyn SdpSolver + Send>> {
    let value = value.trim();
    if value.is_empty() || value.eq_ignore_ascii_case("ipm") {
        return Ok(Box::new(InteriorPoint::default()));
    }
    if let Some(cmd) = value.strip_prefix("external:") {
        let mut parts = cmd.split_whitespace().map(str::to_owned);
        let program = parts.next().ok_or_else(|| Error::Usage("external solver needs a program".into()))?;
        return Ok(Box::new(ExternalSolver::new(program, parts.collect())));
    }
    Err(Error::Usage(format!("unknown {SOLVER_ENV} value `{value}`; expected `ipm` or `external:<program>`")))
}

/// Back end named by the environment.
pub fn solver_from_env() -> Result<Box<dyn SdpSolver + Send>> {
    parse_solver(&std::env::var(SOLVER_ENV).unwrap_or_default())
}

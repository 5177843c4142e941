//! White-noise visibility thresholds and statistics of count data.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::bell::{BellExpression, CorrelationTable, Scenario};
use crate::math::{abs, sqrt};
use crate::model::{correlations_of, CMatrix, QuantumModel, C64};
use crate::{Error, Result};

/// Correlations of `model`'s measurements on the maximally mixed state.
pub fn white_noise_correlations(model: &QuantumModel) -> Result<CorrelationTable> {
    let d = model.d_a() * model.d_b();
    let mixed = CMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
    let noisy = QuantumModel::new(
        model.d_a(),
        model.d_b(),
        mixed,
        model.effects(crate::bell::Party::A).to_vec(),
        model.effects(crate::bell::Party::B).to_vec(),
        model.restriction().cloned(),
    )?;
    correlations_of(&noisy)
}

/// Which side of the bound counts as a violation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Exceeds,
    FallsBelow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub expression: String,
    pub bound_name: String,
    pub bound: f64,
    pub target: f64,
    pub white: f64,
    /// Smallest target weight `v` with `v·target + (1−v)·white` still violating the bound.
    pub threshold: f64,
    pub orientation: Orientation,
}

/// Visibility threshold from already evaluated values.
pub fn visibility_from_values(
    expression: &str,
    bound_name: &str,
    bound: f64,
    target: f64,
    white: f64,
) -> Result<VisibilityReport> {
    if ![bound, target, white].iter().all(|x| x.is_finite()) {
        return Err(Error::invalid("non-finite visibility input"));
    }
    let denom = target - white;
    if abs(denom) <= 1e-12 * (1.0 + abs(target) + abs(white)) {
        return Err(Error::invalid("target and white-noise values coincide"));
    }
    let orientation = if denom > 0.0 { Orientation::Exceeds } else { Orientation::FallsBelow };
    let beats = match orientation {
        Orientation::Exceeds => target > bound,
        Orientation::FallsBelow => target < bound,
    };
    if !beats {
        return Err(Error::NoViolationPossible(format!(
            "target value {target} does not violate the {bound_name} bound {bound}"
        )));
    }
    let threshold = (bound - white) / denom;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!(
            "threshold {threshold} outside [0, 1]: white noise value {white} already violates the bound {bound}"
        )));
    }
    Ok(VisibilityReport {
        expression: expression.into(),
        bound_name: bound_name.into(),
        bound,
        target,
        white,
        threshold,
        orientation,
    })
}

/// Evaluates `expr` on both tables and solves for the visibility threshold.
pub fn visibility_threshold(
    expr: &BellExpression,
    target: &CorrelationTable,
    white: &CorrelationTable,
    bound: f64,
    expression: &str,
    bound_name: &str,
) -> Result<VisibilityReport> {
    visibility_from_values(expression, bound_name, bound, expr.evaluate(target)?, expr.evaluate(white)?)
}

/// Event counts per setting pair, row-major `(k, ℓ)` within each block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountData {
    scenario: Scenario,
    blocks: Vec<Vec<u64>>,
}

impl CountData {
    pub fn zeros(scenario: Scenario) -> Self {
        let blocks = scenario.blocks().map(|(_, _, ra, rb)| vec![0; ra * rb]).collect();
        CountData { scenario, blocks }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Adds events to a cell; indices are 1-based.
    pub fn add(&mut self, a_set: usize, b_set: usize, a_out: usize, b_out: usize, count: u64) -> Result<()> {
        use crate::bell::Party;
        self.scenario.check_setting(Party::A, a_set)?;
        self.scenario.check_setting(Party::B, b_set)?;
        self.scenario.check_outcome(Party::A, a_set, a_out)?;
        self.scenario.check_outcome(Party::B, b_set, b_out)?;
        let rb = self.scenario.outcomes(Party::B, b_set);
        let cell = &mut self.blocks[self.scenario.block_index(a_set, b_set)][(a_out - 1) * rb + b_out - 1];
        *cell = cell.checked_add(count).ok_or_else(|| Error::invalid("count overflow"))?;
        Ok(())
    }

    pub fn count(&self, a_set: usize, b_set: usize, a_out: usize, b_out: usize) -> u64 {
        let rb = self.scenario.outcomes(crate::bell::Party::B, b_set);
        self.blocks[self.scenario.block_index(a_set, b_set)][(a_out - 1) * rb + b_out - 1]
    }

    pub fn block_total(&self, a_set: usize, b_set: usize) -> u64 {
        self.blocks[self.scenario.block_index(a_set, b_set)].iter().sum()
    }

    /// Draws `per_block` events from every block of `table`.
    pub fn sample(table: &CorrelationTable, per_block: u64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scenario = table.scenario().clone();
        let blocks = scenario
            .blocks()
            .map(|(mu, nu, _, _)| multinomial(&mut rng, per_block, table.block(mu, nu)))
            .collect();
        CountData { scenario, blocks }
    }
}

/// Multinomial draw as a chain of conditional binomials.
fn multinomial(rng: &mut impl Rng, n: u64, p: &[f64]) -> Vec<u64> {
    let mut left = n;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(p.len());
    for (i, &pi) in p.iter().enumerate() {
        if i + 1 == p.len() {
            out.push(left);
            break;
        }
        let q = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let x = if left == 0 || q == 0.0 {
            0
        } else {
            rng.sample(Binomial::new(left, q).expect("probability in [0, 1]"))
        };
        out.push(x);
        left -= x;
        mass -= pi;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountEvaluation {
    pub value: f64,
    /// Standard deviation under independent multinomial blocks.
    pub sigma: f64,
}

/// Plug-in value and delta-method standard deviation of `expr` on count data.
pub fn evaluate_counts(expr: &BellExpression, data: &CountData) -> Result<CountEvaluation> {
    if expr.scenario() != data.scenario() {
        return Err(Error::invalid("expression and count scenarios differ"));
    }
    let coeffs = expr.block_coefficients();
    let mut value = expr.constant();
    let mut var = 0.0;
    for (((mu, nu, _, _), counts), c) in data.scenario.blocks().zip(&data.blocks).zip(&coeffs) {
        let total: u64 = counts.iter().sum();
        let used = c.iter().any(|&x| x != 0.0);
        if total == 0 {
            if used {
                return Err(Error::InsufficientData(format!("no events for setting pair ({mu},{nu})")));
            }
            continue;
        }
        let n = total as f64;
        let (mut first, mut second) = (0.0, 0.0);
        for (&k, &ct) in counts.iter().zip(c) {
            let p = k as f64 / n;
            first += ct * p;
            second += ct * ct * p;
        }
        value += first;
        var += (second - first * first).max(0.0) / n;
    }
    Ok(CountEvaluation { value, sigma: sqrt(var) })
}

/// Distance from the bound in standard deviations, positive when the data
/// violate it in the given orientation. Infinite when sigma is zero.
pub fn violation_sigmas(eval: &CountEvaluation, bound: f64, orientation: Orientation) -> f64 {
    let excess = match orientation {
        Orientation::Exceeds => eval.value - bound,
        Orientation::FallsBelow => bound - eval.value,
    };
    if eval.sigma > 0.0 {
        excess / eval.sigma
    } else if excess == 0.0 {
        0.0
    } else {
        excess.signum() * f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{cglmp_iprime, named};
    use crate::model::random_model;
    use approx::assert_relative_eq;

    #[test]
    fn white_noise_of_full_rank_projective_is_uniform() {
        for r in [3, 4] {
            let e = named(if r == 3 { "I3" } else { "I4" }).unwrap();
            let m = random_model(e.scenario(), r, r, None, 2).unwrap();
            let w = white_noise_correlations(&m).unwrap();
            assert!(w.max_abs_diff(&CorrelationTable::uniform(e.scenario().clone())).unwrap() < 1e-12);
            let want = -((r - 1) as f64) / r as f64;
            assert_relative_eq!(e.evaluate(&w).unwrap(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn table_visibilities() {
        let v = visibility_from_values("I3", "2-outcome", 0.20711, 0.30495, -2.0 / 3.0).unwrap();
        assert!((v.threshold - 0.8993).abs() < 1e-3, "{}", v.threshold);
        assert_eq!(v.orientation, Orientation::Exceeds);
        let v = visibility_from_values("I4", "2-outcome", 0.20711, 0.36476, -0.75).unwrap();
        assert!((v.threshold - 0.859).abs() < 1e-3);
        let v = visibility_from_values("I4", "3-outcome", 0.30495, 0.36476, -0.75).unwrap();
        assert!((v.threshold - 0.946).abs() < 1e-3);
        // v·target + (1−v)·white = bound
        assert_relative_eq!(v.threshold * v.target + (1.0 - v.threshold) * v.white, v.bound, epsilon = 1e-14);
    }

    #[test]
    fn visibility_errors_and_orientation() {
        assert!(matches!(
            visibility_from_values("x", "b", 0.5, 0.4, 0.0),
            Err(Error::NoViolationPossible(_))
        ));
        assert!(visibility_from_values("x", "b", 0.5, 0.7, 0.7).is_err());
        assert!(visibility_from_values("x", "b", 0.5, 0.7, 0.6).is_err());
        // I′ form: smaller is better
        let v = visibility_from_values("I'", "b", 0.79289, 0.69505, 5.0 / 3.0).unwrap();
        assert_eq!(v.orientation, Orientation::FallsBelow);
        assert!((v.threshold - 0.8993).abs() < 1e-3);
    }

    #[test]
    fn affine_rescaling_invariance() {
        let base = visibility_from_values("x", "b", 0.2, 0.3, -0.6).unwrap();
        let (a, b) = (-3.5, 2.0);
        let t = |x: f64| a * x + b;
        let scaled = visibility_from_values("x", "b", t(0.2), t(0.3), t(-0.6)).unwrap();
        assert_relative_eq!(base.threshold, scaled.threshold, epsilon = 1e-12);
    }

    #[test]
    fn vertex_counts_have_zero_sigma() {
        let e = cglmp_iprime(3).unwrap();
        let mut data = CountData::zeros(e.scenario().clone());
        for (mu, nu, _, _) in e.scenario().blocks() {
            data.add(mu, nu, 1, 1, 250).unwrap();
        }
        let ev = evaluate_counts(&e, &data).unwrap();
        assert_relative_eq!(ev.value, 1.0, epsilon = 1e-15);
        assert_eq!(ev.sigma, 0.0);
        assert_eq!(violation_sigmas(&ev, 1.0, Orientation::FallsBelow), 0.0);
    }

    #[test]
    fn missing_block_is_insufficient() {
        let e = named("I3").unwrap();
        let mut data = CountData::zeros(e.scenario().clone());
        data.add(1, 1, 1, 1, 5).unwrap();
        assert!(matches!(evaluate_counts(&e, &data), Err(Error::InsufficientData(_))));
        assert!(data.add(3, 1, 1, 1, 1).is_err());
    }

    #[test]
    fn sigma_matches_direct_formula() {
        let e = named("I3").unwrap();
        let m = random_model(e.scenario(), 3, 3, None, 4).unwrap();
        let t = correlations_of(&m).unwrap();
        let data = CountData::sample(&t, 5000, 1);
        let ev = evaluate_counts(&e, &data).unwrap();
        // oracle: plug-in table and per-entry variance written out by hand
        let s = e.scenario();
        let mut var = 0.0;
        for (mu, nu, _, _) in s.blocks() {
            let n = data.block_total(mu, nu) as f64;
            let c: Vec<f64> = {
                let mut v = vec![0.0; 9];
                for j in e.joint_terms().iter().filter(|j| j.a_set == mu && j.b_set == nu) {
                    v[(j.a_out - 1) * 3 + j.b_out - 1] += j.coeff;
                }
                v
            };
            let p: Vec<f64> = (0..9).map(|i| data.count(mu, nu, i / 3 + 1, i % 3 + 1) as f64 / n).collect();
            let mean: f64 = c.iter().zip(&p).map(|(c, p)| c * p).sum();
            let sq: f64 = c.iter().zip(&p).map(|(c, p)| c * c * p).sum();
            var += (sq - mean * mean) / n;
        }
        assert_relative_eq!(ev.sigma, var.sqrt(), epsilon = 1e-12);
        assert!((ev.value - e.evaluate(&t).unwrap()).abs() < 6.0 * ev.sigma);
    }

    #[test]
    fn multinomial_preserves_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = multinomial(&mut rng, 1000, &[0.2, 0.0, 0.5, 0.3]);
        assert_eq!(x.iter().sum::<u64>(), 1000);
        assert_eq!(x[1], 0);
    }
}

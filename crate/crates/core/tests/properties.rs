//! Structural invariants of the CGLMP combination, outcome merging and
//! relabeling, checked on random non-signaling tables.

use polybell_core::bell::{
    cglmp_iprime, check_nonsignaling, merge_outcomes, relabel, CorrelationTable, PartySel, Relabeling, Scenario,
};
use polybell_core::model::{correlations_of, random_model};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT: f64 = 1e-12;

/// Outcome difference fixed per setting pair; marginals are uniform, so any
/// choice of shifts is non-signaling.
fn shifted_box(s: &Scenario, r: usize, shifts: [usize; 4]) -> CorrelationTable {
    CorrelationTable::from_fn(s.clone(), |mu, nu, k, l| {
        if (l + r - k) % r == shifts[(mu - 1) * 2 + nu - 1] {
            1.0 / r as f64
        } else {
            0.0
        }
    })
    .unwrap()
}

/// Convex mixture of deterministic strategies, shifted boxes and quantum
/// tables with random weights.
fn random_ns_table(r: usize, rng: &mut ChaCha8Rng) -> CorrelationTable {
    let s = Scenario::uniform(2, r).unwrap();
    let parts = rng.random_range(1..=4);
    let mut table: Option<CorrelationTable> = None;
    let mut total = 0.0;
    for _ in 0..parts {
        let part = match rng.random_range(0..3) {
            0 => {
                let a = [rng.random_range(1..=r), rng.random_range(1..=r)];
                let b = [rng.random_range(1..=r), rng.random_range(1..=r)];
                CorrelationTable::deterministic(s.clone(), &a, &b).unwrap()
            }
            1 => shifted_box(&s, r, core::array::from_fn(|_| rng.random_range(0..r))),
            _ => correlations_of(&random_model(&s, r, r, None, rng.random()).unwrap()).unwrap(),
        };
        let w: f64 = rng.random_range(0.05..1.0);
        total += w;
        table = Some(match table {
            None => part,
            Some(t) => t.mix(1.0 - w / total, &part).unwrap(),
        });
    }
    table.unwrap()
}

fn chain_slack(table: &CorrelationTable, r: usize) -> f64 {
    let full = cglmp_iprime(r).unwrap().evaluate(table).unwrap();
    let merged = merge_outcomes(table, PartySel::Both, r, 1).unwrap();
    let reduced = cglmp_iprime(r - 1).unwrap().evaluate(&merged).unwrap();
    let lost = table.a_marginal(2, 2, r) + table.b_marginal(2, 2, r) + table.a_marginal(1, 1, r) + table.b_marginal(1, 1, r);
    full - (reduced - lost)
}

#[test]
fn merging_chain_on_random_tables() {
    for r in [3, 4] {
        let mut rng = ChaCha8Rng::seed_from_u64(r as u64);
        for i in 0..10_000 {
            let t = random_ns_table(r, &mut rng);
            assert!(check_nonsignaling(&t, 1e-9).nonsignaling);
            let slack = chain_slack(&t, r);
            assert!(slack >= -EXACT, "r={r} table {i}: slack {slack}");
        }
    }
}

#[test]
fn single_outcome_gives_one() {
    let s = Scenario::uniform(2, 1).unwrap();
    let t = CorrelationTable::uniform(s);
    assert_eq!(cglmp_iprime(1).unwrap().evaluate(&t).unwrap(), 1.0);
}

fn term_values(table: &CorrelationTable, r: usize) -> Vec<f64> {
    cglmp_iprime(r).unwrap().joint_terms().iter().map(|t| t.coeff * table.p(t.a_set, t.b_set, t.a_out, t.b_out)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn terms_are_nonnegative(seed in any::<u64>(), r in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_ns_table(r, &mut rng);
        prop_assert!(term_values(&t, r).iter().all(|&v| v >= 0.0));
        prop_assert!(cglmp_iprime(r).unwrap().evaluate(&t).unwrap() >= 0.0);
    }

    #[test]
    fn chain_holds(seed in any::<u64>(), r in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_ns_table(r, &mut rng);
        prop_assert!(chain_slack(&t, r) >= -EXACT);
    }

    #[test]
    fn evaluation_is_affine(seed in any::<u64>(), alpha in 0.0f64..=1.0, r in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_ns_table(r, &mut rng);
        let q = random_ns_table(r, &mut rng);
        let e = cglmp_iprime(r).unwrap();
        let mixed = e.evaluate(&p.mix(alpha, &q).unwrap()).unwrap();
        let direct = alpha * e.evaluate(&p).unwrap() + (1.0 - alpha) * e.evaluate(&q).unwrap();
        prop_assert!((mixed - direct).abs() <= 1e-12);
    }

    #[test]
    fn relabel_then_inverse_is_identity(seed in any::<u64>(), r in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_ns_table(r, &mut rng);
        let s = t.scenario().clone();
        let mut perm = || {
            let mut p: Vec<usize> = (1..=r).collect();
            for i in (1..r).rev() {
                p.swap(i, rng.random_range(0..=i));
            }
            p
        };
        let maps = Relabeling::within(s, vec![perm(), perm()], vec![perm(), perm()]).unwrap();
        let there = relabel(&t, &maps).unwrap();
        let back = relabel(&there, &maps.inverse().unwrap()).unwrap();
        prop_assert_eq!(back.max_abs_diff(&t), Some(0.0));
    }
}

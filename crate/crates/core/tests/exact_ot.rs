mod common;

use common::*;
use joinest::ot::{check_cyclical_monotonicity, solve_ot, OtConfig};
use joinest::{empirical_block_measure, ingest, Alphabet, BlockCost, BlockMeasure, CostSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_permutation_oracle_on_uniform_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.gen_range(1..=5);
        let x = alphabet(n);
        let y = alphabet(n);
        let c = random_cost(&mut rng, &x, &y);
        let u = vec![1.0 / n as f64; n];
        let plan = solve_ot(&measure(&x, &u), &measure(&y, &u), &c, &OtConfig::default()).unwrap();
        let rows: Vec<Vec<f64>> = c.matrix().chunks(n).map(<[f64]>::to_vec).collect();
        assert!((plan.cost_value() - permutation_oracle(&rows)).abs() < 1e-9);
    }
}

#[test]
fn matches_vertex_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let (m, n) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let x = alphabet(m);
        let y = alphabet(n);
        let c = random_cost(&mut rng, &x, &y);
        let (a, b) = (measure(&x, &simplex_point(&mut rng, m)), measure(&y, &simplex_point(&mut rng, n)));
        let plan = solve_ot(&a, &b, &c, &OtConfig::default()).unwrap();
        let rows: Vec<Vec<f64>> = c.matrix().chunks(n).map(<[f64]>::to_vec).collect();
        let oracle = vertex_oracle(a.masses(), b.masses(), &rows);
        assert!((plan.cost_value() - oracle).abs() < 1e-9, "{} vs {oracle}", plan.cost_value());
        assert!(plan.marginal_violation() < 1e-12);
        assert!(plan.dual_gap().unwrap().abs() < 1e-9);
        assert!(plan.max_dual_violation(&c).unwrap() < 1e-9);
    }
}

#[test]
fn identical_marginals_under_hamming_cost_nothing() {
    let alpha = Alphabet::new(["0", "1"]).unwrap();
    let s = ingest("0 1 1 0 1 0 0 1 1 1 0", Some(&alpha)).unwrap();
    let m = empirical_block_measure::<f64>(&s, 3).unwrap();
    let plan = solve_ot(&m, &m, &CostSpec::hamming(&alpha), &OtConfig::default()).unwrap();
    assert_eq!(plan.cost_value(), 0.0);
}

#[test]
fn point_masses_cost_their_distance() {
    let alpha = Alphabet::new(["0", "1"]).unwrap();
    let a = BlockMeasure::<f64>::point_mass(alpha.clone(), vec![0, 0, 1]).unwrap();
    let b = BlockMeasure::<f64>::point_mass(alpha.clone(), vec![1, 0, 0]).unwrap();
    let c = CostSpec::hamming(&alpha);
    let plan = solve_ot(&a, &b, &c, &OtConfig::default()).unwrap();
    assert_eq!(plan.cost_value(), 2.0);
    assert_eq!(plan.dual_gap(), Some(0.0));
}

#[test]
fn integer_path_is_exactly_feasible() {
    let alpha = Alphabet::new(["0", "1", "2"]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs: Vec<&str> = (0..97).map(|_| ["0", "1", "2"][rng.gen_range(0..3)]).collect();
    let ys: Vec<&str> = (0..61).map(|_| ["0", "1", "2"][rng.gen_range(0..2)]).collect();
    let x = ingest(&xs.join(" "), Some(&alpha)).unwrap();
    let y = ingest(&ys.join(" "), Some(&alpha)).unwrap();
    let a = empirical_block_measure::<f64>(&x, 2).unwrap();
    let b = empirical_block_measure::<f64>(&y, 2).unwrap();
    let c = CostSpec::hamming(&alpha);
    let plan = solve_ot(&a, &b, &c, &OtConfig::default()).unwrap();
    assert!(plan.marginal_violation() < 1e-14);
    assert!(plan.dual_gap().unwrap().abs() < 1e-12);
    assert!(plan.max_dual_violation(&c).unwrap() < 1e-12);
    let report = check_cyclical_monotonicity(&plan, &c, 8, 2000, 1).unwrap();
    assert!(report.violations.is_empty());
}

#[test]
fn cyclical_monotonicity_flags_a_bad_plan() {
    use joinest::ot::{PlanEntry, TransportPlan};
    let alpha = Alphabet::new(["0", "1"]).unwrap();
    let u = measure(&alpha, &[0.5, 0.5]);
    let c = CostSpec::hamming(&alpha);
    let anti = TransportPlan::new(
        u.clone(),
        u.clone(),
        vec![
            PlanEntry { row: 0, col: 1, mass: 0.5 },
            PlanEntry { row: 1, col: 0, mass: 0.5 },
        ],
        1.0,
        None,
    )
    .unwrap();
    let report = check_cyclical_monotonicity(&anti, &c, 8, 0, 0).unwrap();
    assert!(report.exhaustive);
    assert!(!report.violations.is_empty());
    let good = solve_ot(&u, &u, &c, &OtConfig::default()).unwrap();
    assert!(check_cyclical_monotonicity(&good, &c, 8, 0, 0).unwrap().violations.is_empty());
}

#[test]
fn budget_is_enforced() {
    let x = alphabet(4);
    let u = measure(&x, &[0.25; 4]);
    let c = CostSpec::hamming(&x);
    let cfg = OtConfig { max_entries: 15, ..OtConfig::default() };
    assert!(matches!(
        solve_ot(&u, &u, &c, &cfg),
        Err(joinest::Error::BudgetExceeded { needed: 16, budget: 15 })
    ));
}

#[test]
fn lazy_costs_agree_with_cached_costs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = alphabet(6);
    let c = random_cost(&mut rng, &x, &x);
    let (a, b) = (measure(&x, &simplex_point(&mut rng, 6)), measure(&x, &simplex_point(&mut rng, 6)));
    let cached = solve_ot(&a, &b, &c, &OtConfig::default()).unwrap();
    let lazy = solve_ot(&a, &b, &c, &OtConfig { cache_entries: 0, ..OtConfig::default() }).unwrap();
    assert_eq!(cached, lazy);
    assert!((cached.transport_cost(&c) - cached.cost_value()).abs() < 1e-15);
    let _ = c.cost(&[0], &[1]);
}

#[test]
fn json_round_trip_is_lossless() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = alphabet(3);
    let y = alphabet(4);
    let c = random_cost(&mut rng, &x, &y);
    let (a, b) = (measure(&x, &simplex_point(&mut rng, 3)), measure(&y, &simplex_point(&mut rng, 4)));
    let plan = solve_ot(&a, &b, &c, &OtConfig::default()).unwrap();
    let back = joinest::Plan::from_json(&plan.to_json()).unwrap();
    assert_eq!(back, plan);
}

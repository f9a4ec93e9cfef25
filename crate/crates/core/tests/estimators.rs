mod common;

use common::{alphabet, random_cost};
use joinest::process::MarkovModel;
use joinest::{
    estimate_oj, k_schedule, Alphabet, CostSpec, Error, EstimatorConfig, KChoice, ScheduleRule, SymbolSequence,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bin() -> Alphabet {
    Alphabet::new(["0", "1"]).unwrap()
}

fn random_sequence<R: Rng>(rng: &mut R, alpha: &Alphabet, n: usize) -> SymbolSequence {
    let symbols = (0..n).map(|_| rng.gen_range(0..alpha.len() as u8)).collect();
    SymbolSequence::new(alpha.clone(), symbols).unwrap()
}

fn entropic(k: usize, eta: f64) -> EstimatorConfig<f64> {
    let mut cfg = EstimatorConfig::entropic(k, eta);
    cfg.tol = 1e-11;
    cfg.max_iter = 1_000_000;
    cfg
}

#[test]
fn identical_sequences_cost_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random_sequence(&mut rng, &alphabet(3), 500);
    let h = CostSpec::<f64>::hamming(&alphabet(3));
    for k in 1..=5 {
        let r = estimate_oj(&x, &x, &h, &EstimatorConfig::exact(k)).unwrap();
        assert_eq!(r.cost_estimate, 0.0);
        assert_eq!(r.k_used, k);
    }
}

#[test]
fn bernoulli_against_alternation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let bern = MarkovModel::iid(bin(), vec![0.5, 0.5]).unwrap();
    let alt = MarkovModel::new(bin(), vec![vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap();
    let x = bern.sample(10_000, &mut rng).unwrap();
    let y = alt.sample(10_000, &mut rng).unwrap();
    let h = CostSpec::<f64>::hamming(&bin());
    let one = estimate_oj(&x, &y, &h, &EstimatorConfig::exact(1)).unwrap();
    assert!(one.cost_estimate < 0.02, "{}", one.cost_estimate);
    let eight = estimate_oj(&x, &y, &h, &EstimatorConfig::exact(8)).unwrap();
    assert!(eight.cost_estimate > 0.25, "{}", eight.cost_estimate);
}

#[test]
fn estimate_matches_its_joining() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let (xa, ya) = (alphabet(rng.gen_range(1..=3)), alphabet(rng.gen_range(1..=3)));
        let c = random_cost(&mut rng, &xa, &ya);
        let n = rng.gen_range(5..200);
        let x = random_sequence(&mut rng, &xa, n);
        let ny = rng.gen_range(5..200);
        let y = random_sequence(&mut rng, &ya, ny);
        let k = rng.gen_range(1..=4);
        for eta in [0.0, 0.05, 0.5] {
            let cfg = if eta == 0.0 { EstimatorConfig::exact(k) } else { entropic(k, eta) };
            let r = estimate_oj(&x, &y, &c, &cfg).unwrap();
            let j = &r.joining;
            let identity = j.expected_cost(&c).unwrap() - eta * j.block_entropy_rate();
            assert!((r.cost_estimate - identity).abs() < 1e-9);
            assert!(r.cost_estimate <= c.sup_norm() + 1e-12);
            if eta == 0.0 {
                assert!(r.cost_estimate >= 0.0);
                assert!(r.diagnostics["dual_gap"].as_f64().unwrap().abs() < 1e-7);
            } else {
                let floor = -eta * ((xa.len() as f64).ln() + (ya.len() as f64).ln());
                assert!(r.cost_estimate >= floor - 1e-12);
                assert_eq!(r.diagnostics["sinkhorn_status"], "converged");
            }
        }
    }
}

#[test]
fn entropic_estimate_is_sandwiched() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = CostSpec::<f64>::hamming(&bin());
    for _ in 0..20 {
        let x = random_sequence(&mut rng, &bin(), 300);
        let y = MarkovModel::binary_symmetric(0.2).unwrap().sample(300, &mut rng).unwrap();
        let k = rng.gen_range(1..=4);
        let exact = estimate_oj(&x, &y, &h, &EstimatorConfig::exact(k)).unwrap();
        let (m, mp) = (
            exact.diagnostics["support_x"].as_f64().unwrap(),
            exact.diagnostics["support_y"].as_f64().unwrap(),
        );
        for eta in [1.0, 0.1, 0.01] {
            let reg = estimate_oj(&x, &y, &h, &entropic(k, eta)).unwrap();
            assert!(reg.cost_estimate <= exact.cost_estimate + 1e-9);
            assert!(reg.cost_estimate >= exact.cost_estimate - eta / k as f64 * (m * mp).ln() - 1e-9);
        }
    }
}

#[test]
fn ragged_lengths_are_allowed() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_sequence(&mut rng, &bin(), 120);
    let y = random_sequence(&mut rng, &bin(), 75);
    let r = estimate_oj(&x, &y, &CostSpec::<f64>::hamming(&bin()), &EstimatorConfig::exact(3)).unwrap();
    assert_eq!((r.n_x, r.n_y), (120, 75));
    assert_eq!(r.joining.plan().rows().counts().unwrap().1, 118);
    assert_eq!(r.joining.plan().cols().counts().unwrap().1, 73);
}

#[test]
fn invalid_requests() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = random_sequence(&mut rng, &bin(), 10);
    let h = CostSpec::<f64>::hamming(&bin());
    assert_eq!(
        estimate_oj(&x, &x, &h, &EstimatorConfig::exact(11)).unwrap_err(),
        Error::KExceedsLength { k: 11, n: 10 }
    );
    assert!(estimate_oj(&x, &x, &h, &EstimatorConfig::exact(0)).is_err());
    assert!(estimate_oj(&x, &x, &h, &EstimatorConfig::entropic(2, 0.0)).is_err());
    let mut cfg = EstimatorConfig::exact(2);
    cfg.eta = 0.1;
    assert!(estimate_oj(&x, &x, &h, &cfg).is_err());
    let other = CostSpec::<f64>::hamming(&alphabet(3));
    assert_eq!(
        estimate_oj(&x, &x, &other, &EstimatorConfig::exact(2)).unwrap_err(),
        Error::AlphabetMismatch
    );
    let mut slow = entropic(3, 0.001);
    slow.max_iter = 2;
    let y = random_sequence(&mut rng, &bin(), 10);
    assert!(matches!(
        estimate_oj(&x, &y, &h, &slow).unwrap_err(),
        Error::NotConverged { .. }
    ));
}

#[test]
fn schedules() {
    let geo = ScheduleRule::GeometricMixing { alpha: 0.5, rho: 0.4, x_size: 2, y_size: 2 };
    assert_eq!(k_schedule(10_000, &geo).unwrap().k, 6);
    let poly = ScheduleRule::PolynomialMixing { p: 1.0, x_size: 2, y_size: 2 };
    let k = k_schedule(10_000, &poly).unwrap().k;
    assert!(k <= 13 && (k as f64) < 10_000f64.log2());
    let ent = ScheduleRule::EntropyRate { h_x: 0.61, h_y: 0.69, eps: 0.1 };
    for rule in [&geo, &poly, &ent] {
        let s = k_schedule(2, rule).unwrap();
        assert_eq!((s.k, s.g), (1, 0));
        assert!(k_schedule(1, rule).is_err());
    }
    assert!(k_schedule(100, &ScheduleRule::GeometricMixing { alpha: 1.5, rho: 0.4, x_size: 2, y_size: 2 }).is_err());
    assert!(k_schedule(100, &ScheduleRule::PolynomialMixing { p: 2.0, x_size: 2, y_size: 2 }).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = random_sequence(&mut rng, &bin(), 10_000);
    let mut cfg = EstimatorConfig::exact(1);
    cfg.k = KChoice::Rule(geo);
    let r = estimate_oj(&x, &x, &CostSpec::<f64>::hamming(&bin()), &cfg).unwrap();
    assert_eq!(r.k_used, 6);
    assert_eq!(r.g_used, k_schedule(10_000, &cfg_rule(&cfg)).unwrap().g);
}

fn cfg_rule(cfg: &EstimatorConfig<f64>) -> ScheduleRule {
    match &cfg.k {
        KChoice::Rule(r) => r.clone(),
        KChoice::Fixed(_) => unreachable!(),
    }
}

#[test]
fn single_precision_estimate() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random_sequence(&mut rng, &bin(), 400);
    let y = random_sequence(&mut rng, &bin(), 400);
    let h64 = CostSpec::<f64>::hamming(&bin());
    let h32 = CostSpec::<f32>::hamming(&bin());
    let a = estimate_oj(&x, &y, &h64, &EstimatorConfig::exact(3)).unwrap().cost_estimate;
    let b = estimate_oj(&x, &y, &h32, &EstimatorConfig::exact(3)).unwrap().cost_estimate;
    assert!((a - b as f64).abs() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relabelling_symbols_leaves_the_estimate_unchanged(
        seed in any::<u64>(),
        k in 1usize..=3,
        shift in 1usize..3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (xa, ya) = (alphabet(3), alphabet(2));
        let c = random_cost(&mut rng, &xa, &ya);
        let x = random_sequence(&mut rng, &xa, 60);
        let y = random_sequence(&mut rng, &ya, 60);
        let base = estimate_oj(&x, &y, &c, &EstimatorConfig::exact(k)).unwrap().cost_estimate;

        // Rotate the X ids and swap the Y ids, carrying tokens and costs along.
        let sx = |s: u8| ((s as usize + shift) % 3) as u8;
        let sy = |s: u8| 1 - s;
        let perm_alpha = |a: &Alphabet, f: &dyn Fn(u8) -> u8| {
            let mut toks = vec![String::new(); a.len()];
            for i in 0..a.len() as u8 {
                toks[f(i) as usize] = a.token(i).to_string();
            }
            Alphabet::new(toks).unwrap()
        };
        let (xa2, ya2) = (perm_alpha(&xa, &sx), perm_alpha(&ya, &sy));
        let mut rows = vec![vec![0.0; 2]; 3];
        for u in 0..3u8 {
            for v in 0..2u8 {
                rows[sx(u) as usize][sy(v) as usize] = c.get(u, v);
            }
        }
        let c2 = CostSpec::new(xa2.clone(), ya2.clone(), rows).unwrap();
        let x2 = SymbolSequence::new(xa2, x.symbols().iter().map(|&s| sx(s)).collect()).unwrap();
        let y2 = SymbolSequence::new(ya2, y.symbols().iter().map(|&s| sy(s)).collect()).unwrap();
        let moved = estimate_oj(&x2, &y2, &c2, &EstimatorConfig::exact(k)).unwrap().cost_estimate;
        prop_assert!((base - moved).abs() < 1e-12, "{} vs {}", base, moved);
    }
}

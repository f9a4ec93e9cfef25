mod common;

use std::collections::BTreeMap;

use common::{alphabet, random_cost};
use joinest::joining::{build_joining, phase_marginal, stationary_block_marginal, BlockJoining, GapBlock};
use joinest::ot::{solve_entropic_ot, solve_ot, OtConfig, SinkhornConfig, TransportPlan};
use joinest::{Alphabet, BlockMeasure, CostSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bin() -> Alphabet {
    Alphabet::new(["0", "1"]).unwrap()
}

fn random_measure<R: Rng>(rng: &mut R, alpha: &Alphabet, k: usize) -> BlockMeasure<f64> {
    let atoms = rng.gen_range(1..=5);
    BlockMeasure::from_weights(
        alpha.clone(),
        k,
        (0..atoms).map(|_| {
            let b = (0..k).map(|_| rng.gen_range(0..alpha.len() as u8)).collect();
            (b, rng.gen_range(0.1..1.0))
        }),
    )
    .unwrap()
}

/// A fully supported coupling of two random measures.
fn random_plan<R: Rng>(rng: &mut R, x: &Alphabet, y: &Alphabet, k: usize) -> TransportPlan<f64> {
    let a = random_measure(rng, x, k);
    let b = random_measure(rng, y, k);
    let c = random_cost(rng, x, y);
    let mut cfg = SinkhornConfig::new(rng.gen_range(0.05..1.0));
    cfg.tol = 1e-13;
    solve_entropic_ot(&a, &b, &c, &cfg).unwrap().plan
}

fn random_gap<R: Rng>(rng: &mut R, x: &Alphabet, y: &Alphabet, g: usize) -> Option<GapBlock> {
    (g > 0).then(|| GapBlock {
        x: (0..g).map(|_| rng.gen_range(0..x.len() as u8)).collect(),
        y: (0..g).map(|_| rng.gen_range(0..y.len() as u8)).collect(),
    })
}

/// The `m`-marginal of the phase-randomised block process by direct
/// enumeration of every run of consecutive blocks covering the window.
fn brute_marginal(law: &BlockMeasure<f64>, m: usize) -> BTreeMap<Vec<u8>, f64> {
    let p = law.k();
    let mut out = BTreeMap::new();
    for s in 0..p {
        let blocks = (s + m).div_ceil(p);
        let mut runs: Vec<(Vec<u8>, f64)> = vec![(Vec::new(), 1.0 / p as f64)];
        for _ in 0..blocks {
            runs = runs
                .into_iter()
                .flat_map(|(w, q)| {
                    law.iter().map(move |(b, r)| {
                        let mut w = w.clone();
                        w.extend_from_slice(b);
                        (w, q * r)
                    })
                })
                .collect();
        }
        for (w, q) in runs {
            *out.entry(w[s..s + m].to_vec()).or_insert(0.0) += q;
        }
    }
    out
}

fn max_diff(a: &BlockMeasure<f64>, b: &BTreeMap<Vec<u8>, f64>) -> f64 {
    let mut d: f64 = 0.0;
    for (blk, q) in b {
        d = d.max((a.mass_of(blk) - q).abs());
    }
    for (blk, p) in a.iter() {
        d = d.max((p - b.get(blk).copied().unwrap_or(0.0)).abs());
    }
    d
}

fn as_map(m: &BlockMeasure<f64>) -> BTreeMap<Vec<u8>, f64> {
    m.iter().map(|(b, p)| (b.clone(), p)).collect()
}

fn diagonal_joining() -> BlockJoining<f64> {
    let law = BlockMeasure::new(bin(), 2, [(vec![0, 0], 0.5), (vec![1, 1], 0.5)]).unwrap();
    let plan = solve_ot(&law, &law, &CostSpec::hamming(&bin()), &OtConfig::default()).unwrap();
    BlockJoining::new(plan, 0.0, None).unwrap()
}

#[test]
fn diagonal_example_marginals() {
    let j = diagonal_joining();
    assert_eq!(j.period(), 2);
    let m1 = j.project_x(&j.finite_marginal(1).unwrap()).unwrap();
    assert_eq!(as_map(&m1), BTreeMap::from([(vec![0], 0.5), (vec![1], 0.5)]));
    let m2 = j.project_x(&j.finite_marginal(2).unwrap()).unwrap();
    assert_eq!(
        as_map(&m2),
        BTreeMap::from([(vec![0, 0], 0.375), (vec![0, 1], 0.125), (vec![1, 0], 0.125), (vec![1, 1], 0.375)])
    );
    assert_eq!(j.expected_cost(&CostSpec::hamming(&bin())).unwrap(), 0.0);
}

#[test]
fn phase_zero_window_recovers_the_block_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 1..=3 {
        let law = random_measure(&mut rng, &alphabet(3), k);
        assert_eq!(phase_marginal(&law, 0, k, 1 << 20).unwrap(), law);
        // Averaging the k phases weights phase zero by 1/k.
        let avg = stationary_block_marginal(&law, k, 1 << 20).unwrap();
        for (b, p) in law.iter() {
            assert!(avg.mass_of(b) >= p / k as f64 - 1e-15);
        }
    }
}

#[test]
fn gap_extends_the_period() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let plan = random_plan(&mut rng, &bin(), &bin(), 3);
    let j = build_joining(plan.clone(), 0.0, 0, None).unwrap();
    assert_eq!((j.k(), j.g(), j.period()), (3, 0, 3));
    let gap = GapBlock { x: vec![0], y: vec![0] };
    let j = build_joining(plan.clone(), 0.0, 1, Some(gap)).unwrap();
    assert_eq!((j.k(), j.g(), j.period()), (3, 1, 4));
    let bad = GapBlock { x: vec![0, 0], y: vec![0, 0] };
    assert!(build_joining(plan, 0.0, 1, Some(bad)).is_err());
}

#[test]
fn point_mass_plan_is_periodic() {
    let x = BlockMeasure::<f64>::point_mass(bin(), vec![0, 1, 1]).unwrap();
    let y = BlockMeasure::<f64>::point_mass(bin(), vec![1, 0, 0]).unwrap();
    let plan = solve_ot(&x, &y, &CostSpec::hamming(&bin()), &OtConfig::default()).unwrap();
    let j = BlockJoining::new(plan, 0.0, None).unwrap();
    assert_eq!(j.block_entropy_rate(), 0.0);
    for m in 1..=7 {
        let fm = j.finite_marginal(m).unwrap();
        assert!(fm.len() <= 3);
        assert!(fm.masses().iter().all(|&p| (p * 3.0).fract().abs() < 1e-12));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (xs, ys) = j.sample_trajectory(30, &mut rng).unwrap();
    for t in 3..30 {
        assert_eq!(xs.symbols()[t], xs.symbols()[t - 3]);
    }
    assert!(xs.symbols().iter().zip(ys.symbols()).all(|(a, b)| a != b));
}

#[test]
fn constant_pair_trajectory() {
    let x = BlockMeasure::<f64>::point_mass(bin(), vec![0]).unwrap();
    let y = BlockMeasure::<f64>::point_mass(bin(), vec![1]).unwrap();
    let plan = solve_ot(&x, &y, &CostSpec::hamming(&bin()), &OtConfig::default()).unwrap();
    let j = BlockJoining::new(plan, 0.0, None).unwrap();
    let (xs, ys) = j.sample_trajectory(100, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!(xs.symbols().iter().all(|&s| s == 0));
    assert!(ys.symbols().iter().all(|&s| s == 1));
}

#[test]
fn marginals_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let k = rng.gen_range(1..=3);
        let g = rng.gen_range(0..=2);
        let plan = random_plan(&mut rng, &bin(), &alphabet(3), k);
        let gap = random_gap(&mut rng, &bin(), &alphabet(3), g);
        let j = build_joining(plan, 0.0, g, gap).unwrap();
        let law = j.superblock_law().unwrap();
        for m in 1..=4 {
            let fm = j.finite_marginal(m).unwrap();
            assert!(max_diff(&fm, &brute_marginal(&law, m)) < 1e-12);
            let total: f64 = fm.masses().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn projections_are_the_stationarised_marginals() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let k = rng.gen_range(1..=3);
        let plan = random_plan(&mut rng, &bin(), &alphabet(3), k);
        let (a, b) = (plan.rows().clone(), plan.cols().clone());
        let j = BlockJoining::new(plan, 0.0, None).unwrap();
        for m in 1..=4 {
            let fm = j.finite_marginal(m).unwrap();
            assert!(max_diff(&j.project_x(&fm).unwrap(), &brute_marginal(&a, m)) < 1e-12);
            assert!(max_diff(&j.project_y(&fm).unwrap(), &brute_marginal(&b, m)) < 1e-12);
        }
    }
}

#[test]
fn expected_cost_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..30 {
        let k = rng.gen_range(1..=3);
        let g = rng.gen_range(0..=2);
        let (x, y) = (bin(), alphabet(3));
        let c = random_cost(&mut rng, &x, &y);
        let a = random_measure(&mut rng, &x, k);
        let b = random_measure(&mut rng, &y, k);
        let plan = solve_ot(&a, &b, &c, &OtConfig::default()).unwrap();
        let block_cost = plan.cost_value();
        let gap = random_gap(&mut rng, &x, &y, g);
        let gap_cost: f64 = gap
            .as_ref()
            .map_or(0.0, |gb| gb.x.iter().zip(&gb.y).map(|(&u, &v)| c.get(u, v)).sum());
        let j = build_joining(plan, 0.0, g, gap).unwrap();
        let e = j.expected_cost(&c).unwrap();
        assert!((e - (block_cost + gap_cost) / (k + g) as f64).abs() < 1e-12);
        let one = j.finite_marginal(1).unwrap();
        let from_marginal: f64 = one
            .iter()
            .map(|(blk, p)| p * c.get(blk[0] / 3, blk[0] % 3))
            .sum();
        assert!((e - from_marginal).abs() < 1e-12);
    }
}

#[test]
fn block_entropy_rate_examples() {
    let pairs = [(vec![0, 0], vec![0, 0]), (vec![0, 1], vec![1, 0]), (vec![1, 0], vec![0, 1]), (vec![1, 1], vec![1, 1])];
    let u = BlockMeasure::<f64>::new(bin(), 2, pairs.iter().map(|(x, _)| (x.clone(), 0.25))).unwrap();
    let plan = TransportPlan::new(
        u.clone(),
        u.clone(),
        (0..4).map(|i| joinest::ot::PlanEntry { row: i, col: 3 - i, mass: 0.25 }).collect(),
        0.0,
        None,
    )
    .unwrap();
    let j = BlockJoining::new(plan, 0.0, None).unwrap();
    assert!((j.block_entropy_rate() - 2f64.ln()).abs() < 1e-12);

    let prod = TransportPlan::product(&u, &u, &CostSpec::hamming(&bin()));
    let j = BlockJoining::new(prod, 0.0, None).unwrap();
    assert!((j.block_entropy_rate() - 2.0 * 2f64.ln()).abs() < 1e-12);

    let gap = GapBlock { x: vec![1], y: vec![0] };
    let prod = TransportPlan::product(&u, &u, &CostSpec::hamming(&bin()));
    let j = BlockJoining::new(prod, 0.0, Some(gap)).unwrap();
    assert!((j.block_entropy_rate() - 4.0 * 2f64.ln() / 3.0).abs() < 1e-12);
}

#[test]
fn sampled_marginals_match_exact_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let plan = random_plan(&mut rng, &bin(), &bin(), 2);
    let gap = GapBlock { x: vec![1], y: vec![0] };
    let j = BlockJoining::new(plan, 0.0, Some(gap)).unwrap();
    let draws = 200_000;
    for m in [1, 2] {
        let exact = j.finite_marginal(m).unwrap();
        let mut counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        let mut srng = ChaCha8Rng::seed_from_u64(100 + m as u64);
        for _ in 0..draws {
            let (xs, ys) = j.sample_trajectory(m, &mut srng).unwrap();
            let pair: Vec<u8> = xs.symbols().iter().zip(ys.symbols()).map(|(&a, &b)| a * 2 + b).collect();
            *counts.entry(pair).or_insert(0) += 1;
        }
        for (blk, p) in exact.iter() {
            let freq = counts.get(blk).copied().unwrap_or(0) as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * se, "block {blk:?}: {freq} vs {p}");
        }
        assert!(counts.keys().all(|b| exact.mass_of(b) > 0.0));
    }

    let (x1, y1) = j.sample_trajectory(1000, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let (x2, y2) = j.sample_trajectory(1000, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!((x1, y1), (x2, y2));
}

#[test]
fn normalised_block_entropy_decreases_to_the_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let k = rng.gen_range(1..=3);
        let plan = random_plan(&mut rng, &bin(), &bin(), k);
        let j = BlockJoining::new(plan, 0.0, None).unwrap();
        let rate = j.block_entropy_rate();
        let h_pi = rate * k as f64;
        let mut last = f64::INFINITY;
        for m in 1..=4 * k {
            let h = j.finite_marginal(m).unwrap().entropy() / m as f64;
            assert!(h <= last + 1e-12);
            assert!(h >= rate - 1e-12);
            last = h;
            if m % k == 0 {
                // Phase choice plus one extra partial block.
                let blocks = (m / k) as f64;
                let slack = ((k as f64).ln() + (blocks + 1.0) * h_pi) / m as f64 - h_pi / k as f64;
                assert!(h - rate <= slack + 1e-12);
            }
        }
        if k == 1 {
            assert!((last - rate).abs() < 1e-12);
        }
    }

    // A product block law gives an i.i.d. process, which is reached at every m.
    let u = BlockMeasure::<f64>::from_weights(bin(), 2, [(vec![0, 0], 0.09), (vec![0, 1], 0.21), (vec![1, 0], 0.21), (vec![1, 1], 0.49)]).unwrap();
    let j = BlockJoining::new(TransportPlan::product(&u, &u, &CostSpec::hamming(&bin())), 0.0, None).unwrap();
    let h = j.finite_marginal(8).unwrap().entropy() / 8.0;
    assert!((h - j.block_entropy_rate()).abs() < 0.02);
}

#[test]
fn json_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for g in 0..=2 {
        let plan = random_plan(&mut rng, &bin(), &alphabet(3), 2);
        let gap = random_gap(&mut rng, &bin(), &alphabet(3), g);
        let j = build_joining(plan, 0.25, g, gap).unwrap();
        let back = BlockJoining::<f64>::from_json(&j.to_json()).unwrap();
        assert_eq!(back, j);
        assert_eq!(back.finite_marginal(3).unwrap(), j.finite_marginal(3).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn finite_marginals_are_shift_consistent(seed in any::<u64>(), k in 1usize..=3, g in 0usize..=1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = random_plan(&mut rng, &bin(), &bin(), k);
        let gap = random_gap(&mut rng, &bin(), &bin(), g);
        let j = build_joining(plan, 0.0, g, gap).unwrap();
        for m in 1..=4 {
            let fm = j.finite_marginal(m).unwrap();
            let next = j.finite_marginal(m + 1).unwrap();
            let head = next.marginal_window(0, m).unwrap();
            let tail = next.marginal_window(1, m).unwrap();
            prop_assert!(max_diff(&fm, &as_map(&head)) < 1e-12);
            prop_assert!(max_diff(&fm, &as_map(&tail)) < 1e-12);
        }
    }
}

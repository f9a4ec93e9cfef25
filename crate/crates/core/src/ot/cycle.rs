use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::BlockCost;
use crate::error::{Error, Result};
use crate::ot::plan::TransportPlan;
use crate::scalar::Real;

/// A support cycle on which shifting the targets would lower the cost.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleViolation<T> {
    /// Indices into the plan's entries, in cycle order.
    pub cycle: Vec<usize>,
    /// `sum c(u_l, v_l)`
    pub on_support: T,
    /// `sum c(u_l, v_{l+1})`
    pub shifted: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CycleReport<T> {
    pub violations: Vec<CycleViolation<T>>,
    pub cycles_checked: usize,
    pub exhaustive: bool,
}

/// Supports with at most this many points are checked exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 8;

/// Slack allowed before a cycle counts as a violation.
pub const CYCLE_TOL: f64 = 1e-9;

/// Checks `sum c(u_l, v_l) <= sum c(u_l, v_{l+1})` over cycles of at most
/// `max_cycle` support points.
///
/// Small supports are enumerated completely; larger ones are probed with
/// `trials` random cycles drawn from a seeded generator.
pub fn check_cyclical_monotonicity<T: Real>(
    plan: &TransportPlan<T>,
    cost: &dyn BlockCost<T>,
    max_cycle: usize,
    trials: usize,
    seed: u64,
) -> Result<CycleReport<T>> {
    if max_cycle < 2 {
        return Err(Error::InvalidParameter("cycles need at least two points".into()));
    }
    if plan.entries().is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let tol = T::of(CYCLE_TOL);
    let support: Vec<usize> = plan
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.mass > T::zero())
        .map(|(i, _)| i)
        .collect();
    let pts: Vec<(&[u8], &[u8])> = support
        .iter()
        .map(|&i| {
            let e = plan.entries()[i];
            (
                plan.rows().blocks()[e.row].as_slice(),
                plan.cols().blocks()[e.col].as_slice(),
            )
        })
        .collect();
    let eval = |cyc: &[usize]| {
        let mut on = T::zero();
        let mut sh = T::zero();
        for l in 0..cyc.len() {
            let (u, v) = pts[cyc[l]];
            on += cost.cost(u, v);
            sh += cost.cost(u, pts[cyc[(l + 1) % cyc.len()]].1);
        }
        (on, sh)
    };
    let mut report = CycleReport {
        violations: Vec::new(),
        cycles_checked: 0,
        exhaustive: pts.len() <= EXHAUSTIVE_LIMIT,
    };
    let record = |cyc: &[usize], report: &mut CycleReport<T>| {
        let (on, sh) = eval(cyc);
        report.cycles_checked += 1;
        if on > sh + tol {
            report.violations.push(CycleViolation {
                cycle: cyc.iter().map(|&p| support[p]).collect(),
                on_support: on,
                shifted: sh,
            });
        }
    };
    if report.exhaustive {
        // Every ordered arrangement of distinct points; rotations repeat but are cheap here.
        fn extend<F: FnMut(&[usize])>(cur: &mut Vec<usize>, used: &mut [bool], max: usize, f: &mut F) {
            if cur.len() >= 2 {
                f(cur);
            }
            if cur.len() == max {
                return;
            }
            for p in 0..used.len() {
                if !used[p] {
                    used[p] = true;
                    cur.push(p);
                    extend(cur, used, max, f);
                    cur.pop();
                    used[p] = false;
                }
            }
        }
        let mut used = vec![false; pts.len()];
        let mut cur = Vec::new();
        let mut sink = |c: &[usize]| record(c, &mut report);
        extend(&mut cur, &mut used, max_cycle, &mut sink);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..pts.len()).collect();
        for _ in 0..trials {
            let len = rng.gen_range(2..=pts.len().min(max_cycle));
            let (chosen, _) = idx.partial_shuffle(&mut rng, len);
            let cyc = chosen.to_vec();
            record(&cyc, &mut report);
        }
    }
    Ok(report)
}

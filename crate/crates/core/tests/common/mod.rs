#![allow(dead_code)]

use joinest::{Alphabet, BlockMeasure, CostSpec};
use rand::Rng;

pub fn alphabet(n: usize) -> Alphabet {
    Alphabet::new((0..n).map(|i| format!("s{i}"))).unwrap()
}

/// Random probability vector with every entry positive.
pub fn simplex_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn measure(alpha: &Alphabet, masses: &[f64]) -> BlockMeasure<f64> {
    BlockMeasure::from_weights(
        alpha.clone(),
        1,
        masses.iter().enumerate().map(|(i, &p)| (vec![i as u8], p)),
    )
    .unwrap()
}

pub fn random_cost<R: Rng>(rng: &mut R, x: &Alphabet, y: &Alphabet) -> CostSpec<f64> {
    let rows = (0..x.len())
        .map(|_| (0..y.len()).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    CostSpec::new(x.clone(), y.clone(), rows).unwrap()
}

/// Minimum over permutations of the average matched cost.
pub fn permutation_oracle(c: &[Vec<f64>]) -> f64 {
    fn rec(c: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == c.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..c.len() {
            if !used[j] {
                used[j] = true;
                rec(c, row + 1, used, acc + c[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(c, 0, &mut vec![false; c.len()], 0.0, &mut best);
    best / c.len() as f64
}

/// Minimum cost over vertices of the transportation polytope.
///
/// Every vertex is supported on a spanning tree of the bipartite graph, so
/// it suffices to try every `(m + n - 1)`-subset of cells, solve the
/// marginal equations on it by leaf elimination and keep nonnegative solutions.
pub fn vertex_oracle(a: &[f64], b: &[f64], c: &[Vec<f64>]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let size = m + n - 1;
    let mut best = f64::INFINITY;
    let mut pick = Vec::with_capacity(size);
    fn choose(
        start: usize,
        size: usize,
        cells: &[(usize, usize)],
        pick: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if pick.len() == size {
            visit(pick);
            return;
        }
        for s in start..cells.len() {
            if cells.len() - s < size - pick.len() {
                break;
            }
            pick.push(s);
            choose(s + 1, size, cells, pick, visit);
            pick.pop();
        }
    }
    let mut visit = |sel: &[usize]| {
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let mut open: Vec<bool> = vec![true; sel.len()];
        let mut x = vec![0.0; sel.len()];
        let mut remaining = sel.len();
        while remaining > 0 {
            let mut progressed = false;
            for i in 0..m {
                let live: Vec<usize> = (0..sel.len())
                    .filter(|&t| open[t] && cells[sel[t]].0 == i)
                    .collect();
                if live.len() == 1 {
                    let t = live[0];
                    x[t] = ra[i];
                    ra[i] = 0.0;
                    rb[cells[sel[t]].1] -= x[t];
                    open[t] = false;
                    remaining -= 1;
                    progressed = true;
                }
            }
            for j in 0..n {
                let live: Vec<usize> = (0..sel.len())
                    .filter(|&t| open[t] && cells[sel[t]].1 == j)
                    .collect();
                if live.len() == 1 {
                    let t = live[0];
                    x[t] = rb[j];
                    rb[j] = 0.0;
                    ra[cells[sel[t]].0] -= x[t];
                    open[t] = false;
                    remaining -= 1;
                    progressed = true;
                }
            }
            if !progressed {
                // Contains a cycle: not a spanning tree.
                return;
            }
        }
        if ra.iter().chain(&rb).any(|r| r.abs() > 1e-12) || x.iter().any(|&v| v < -1e-12) {
            return;
        }
        let val: f64 = sel
            .iter()
            .zip(&x)
            .map(|(&s, &v)| v * c[cells[s].0][cells[s].1])
            .sum();
        best = best.min(val);
    };
    choose(0, size, &cells, &mut pick, &mut visit);
    best
}

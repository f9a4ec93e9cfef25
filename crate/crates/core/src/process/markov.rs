use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::measure::{Block, BlockMeasure};
use crate::scalar::{xlogx, Real};
use crate::sequence::SymbolSequence;

/// Default cap on the number of atoms of an exact block law.
pub const DEFAULT_ATOM_BUDGET: usize = 1 << 24;

/// Finite-state stationary Markov chain (an i.i.d. process when all rows agree).
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovModel<T> {
    alphabet: Alphabet,
    transition: Vec<T>,
    stationary: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile<T> {
    tokens: Vec<String>,
    transition: Vec<Vec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stationary: Option<Vec<T>>,
}

fn to_f64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

impl<T: Real> MarkovModel<T> {
    /// Validates a row-stochastic matrix; the stationary law is solved for when absent.
    pub fn new(alphabet: Alphabet, rows: Vec<Vec<T>>, stationary: Option<Vec<T>>) -> Result<Self> {
        let s = alphabet.len();
        if rows.len() != s || rows.iter().any(|r| r.len() != s) {
            return Err(Error::InvalidModel(format!("transition matrix must be {s}x{s}")));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.iter().any(|&p| !(p >= T::zero()) || !p.is_finite()) {
                return Err(Error::InvalidModel(format!("row {i} has a negative or non-finite entry")));
            }
            let total: T = r.iter().copied().sum();
            if (total.to_f64_lossy() - 1.0).abs() > T::MASS_TOL.max(1e-12) {
                return Err(Error::InvalidModel(format!("row {i} sums to {total}")));
            }
        }
        let transition: Vec<T> = rows.into_iter().flatten().collect();
        let stationary = match stationary {
            Some(p) => {
                if p.len() != s || p.iter().any(|&x| !(x >= T::zero())) {
                    return Err(Error::InvalidModel("stationary vector".into()));
                }
                p
            }
            None => solve_stationary(&to_f64(&transition), s)
                .into_iter()
                .map(T::of)
                .collect(),
        };
        let model = MarkovModel {
            alphabet,
            transition,
            stationary,
        };
        let total: T = model.stationary.iter().copied().sum();
        let drift = model.fixed_point_error();
        let tol = if T::MASS_TOL > 1e-10 { T::MASS_TOL } else { 1e-10 };
        if (total.to_f64_lossy() - 1.0).abs() > tol || drift > tol {
            return Err(Error::InvalidModel(format!(
                "stationary vector is not invariant (drift {drift:e})"
            )));
        }
        Ok(model)
    }

    /// Independent draws from `p`.
    pub fn iid(alphabet: Alphabet, p: Vec<T>) -> Result<Self> {
        let rows = vec![p.clone(); alphabet.len()];
        Self::new(alphabet, rows, Some(p))
    }

    /// Two-state chain on `{0, 1}` that flips with probability `q`.
    pub fn binary_symmetric(q: T) -> Result<Self> {
        let alphabet = Alphabet::new(["0", "1"])?;
        let half = T::of(0.5);
        Self::new(
            alphabet,
            vec![vec![T::one() - q, q], vec![q, T::one() - q]],
            Some(vec![half, half]),
        )
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn states(&self) -> usize {
        self.alphabet.len()
    }

    pub fn transition(&self, i: u8, j: u8) -> T {
        self.transition[i as usize * self.states() + j as usize]
    }

    pub fn stationary(&self) -> &[T] {
        &self.stationary
    }

    fn fixed_point_error(&self) -> f64 {
        let s = self.states();
        (0..s)
            .map(|j| {
                let pj: T = (0..s)
                    .map(|i| self.stationary[i] * self.transition[i * s + j])
                    .sum();
                (pj - self.stationary[j]).abs().to_f64_lossy()
            })
            .fold(0.0, f64::max)
    }

    /// Strong connectivity of the transition graph.
    pub fn is_irreducible(&self) -> bool {
        let s = self.states();
        let reach = |forward: bool| {
            let mut seen = vec![false; s];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for v in 0..s {
                    let p = if forward {
                        self.transition[u * s + v]
                    } else {
                        self.transition[v * s + u]
                    };
                    if p > T::zero() && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen.iter().all(|&x| x)
        };
        reach(true) && reach(false)
    }

    /// Period of the chain restricted to states reachable from state 0.
    pub fn period(&self) -> usize {
        let s = self.states();
        let mut level = vec![usize::MAX; s];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0]);
        let mut d = 0usize;
        fn gcd(a: usize, b: usize) -> usize {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        while let Some(u) = queue.pop_front() {
            for v in 0..s {
                if self.transition[u * s + v] > T::zero() {
                    if level[v] == usize::MAX {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    } else {
                        d = gcd(d, (level[u] + 1).abs_diff(level[v]));
                    }
                }
            }
        }
        d.max(1)
    }

    pub fn is_aperiodic(&self) -> bool {
        self.period() == 1
    }

    /// Path of length `n` started from the stationary law.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SymbolSequence> {
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        let s = self.states();
        let draw = |w: &[T], rng: &mut R| -> u8 {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (i, p) in w.iter().enumerate() {
                acc += p.to_f64_lossy();
                if u < acc {
                    return i as u8;
                }
            }
            // Rounding left a sliver of mass: take the last positive entry.
            w.iter().rposition(|&p| p > T::zero()).unwrap_or(0) as u8
        };
        let mut out = Vec::with_capacity(n);
        let mut x = draw(&self.stationary, rng);
        out.push(x);
        for _ in 1..n {
            x = draw(&self.transition[x as usize * s..(x as usize + 1) * s], rng);
            out.push(x);
        }
        SymbolSequence::new(self.alphabet.clone(), out)
    }

    /// Exact law of `k` consecutive symbols.
    pub fn exact_block_law(&self, k: usize) -> Result<BlockMeasure<T>> {
        self.exact_block_law_with_budget(k, DEFAULT_ATOM_BUDGET)
    }

    pub fn exact_block_law_with_budget(&self, k: usize, budget: usize) -> Result<BlockMeasure<T>> {
        if k == 0 {
            return Err(Error::ZeroBlockLength);
        }
        let s = self.states();
        let mut layer: Vec<(Block, T)> = (0..s)
            .filter(|&i| self.stationary[i] > T::zero())
            .map(|i| (vec![i as u8], self.stationary[i]))
            .collect();
        for _ in 1..k {
            let mut next = Vec::with_capacity(layer.len() * s);
            for (b, p) in &layer {
                let last = *b.last().expect("blocks are nonempty") as usize;
                for j in 0..s {
                    let t = self.transition[last * s + j];
                    if t > T::zero() {
                        let mut nb = Vec::with_capacity(k);
                        nb.extend_from_slice(b);
                        nb.push(j as u8);
                        next.push((nb, *p * t));
                    }
                }
            }
            if next.len() > budget {
                return Err(Error::BudgetExceeded {
                    needed: next.len(),
                    budget,
                });
            }
            layer = next;
        }
        // Extension in symbol order keeps blocks sorted.
        let (blocks, masses): (Vec<Block>, Vec<T>) = layer.into_iter().unzip();
        let total: T = masses.iter().copied().sum();
        let total = total.to_f64_lossy();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::MassNotNormalized(total));
        }
        Ok(BlockMeasure::from_parts_unchecked(self.alphabet.clone(), k, blocks, masses))
    }

    /// Entropy rate `-sum_i p_i sum_j P_ij log P_ij` in nats.
    pub fn entropy_rate(&self) -> T {
        let s = self.states();
        let mut h = T::zero();
        for i in 0..s {
            let row: T = (0..s).map(|j| xlogx(self.transition[i * s + j])).sum();
            h -= self.stationary[i] * row;
        }
        h
    }

    /// `phi(0) = 1` and, for `g >= 1`, `max_i TV(P^g(i, .), p)` over states of positive mass.
    pub fn phi_mixing(&self, g: usize) -> T {
        if g == 0 {
            return T::one();
        }
        let s = self.states();
        let p = DMatrix::from_row_slice(s, s, &to_f64(&self.transition));
        let mut pg = DMatrix::<f64>::identity(s, s);
        for _ in 0..g {
            pg = &pg * &p;
        }
        let pi = to_f64(&self.stationary);
        let mut worst = 0.0f64;
        for i in 0..s {
            if pi[i] <= 0.0 {
                continue;
            }
            let tv = 0.5 * (0..s).map(|j| (pg[(i, j)] - pi[j]).abs()).sum::<f64>();
            worst = worst.max(tv);
        }
        T::of(worst)
    }

    /// Second-largest eigenvalue modulus of the transition matrix.
    pub fn second_eigenvalue_modulus(&self) -> T {
        let s = self.states();
        if s < 2 {
            return T::zero();
        }
        let p = DMatrix::from_row_slice(s, s, &to_f64(&self.transition));
        let mut moduli: Vec<f64> = p.complex_eigenvalues().iter().map(|z| z.norm()).collect();
        moduli.sort_by(|a, b| b.total_cmp(a));
        T::of(moduli[1].min(1.0))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile<T> = serde_json::from_str(text)?;
        Self::new(Alphabet::new(f.tokens)?, f.transition, f.stationary)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let s = self.states();
        let f = ModelFile {
            tokens: self.alphabet.tokens().to_vec(),
            transition: self.transition.chunks(s).map(<[T]>::to_vec).collect(),
            stationary: Some(self.stationary.clone()),
        };
        serde_json::to_string_pretty(&f).expect("model serializes")
    }
}

/// Stationary law from `p (P - I) = 0`, `sum p = 1`; Cesaro averaging when the
/// linear system is singular.
fn solve_stationary(p: &[f64], s: usize) -> Vec<f64> {
    let mut a = DMatrix::<f64>::zeros(s, s);
    for i in 0..s {
        for j in 0..s {
            a[(j, i)] = p[i * s + j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..s {
        a[(s - 1, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(s);
    rhs[s - 1] = 1.0;
    if let Some(x) = a.lu().solve(&rhs) {
        if x.iter().all(|&v| v > -1e-12 && v.is_finite()) {
            let v: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
            let t: f64 = v.iter().sum();
            return v.into_iter().map(|x| x / t).collect();
        }
    }
    let pm = DMatrix::from_row_slice(s, s, p);
    let mut cur = nalgebra::RowDVector::<f64>::from_element(s, 1.0 / s as f64);
    let mut avg = nalgebra::RowDVector::<f64>::zeros(s);
    let steps = 20_000;
    for _ in 0..steps {
        avg += &cur;
        cur = &cur * &pm;
    }
    (avg / steps as f64).iter().copied().collect()
}

use crate::cost::BlockCost;
use crate::error::{Error, Result};
use crate::measure::BlockMeasure;
use crate::ot::network_simplex::{Costs, Simplex};
use crate::ot::plan::{PlanEntry, TransportPlan};
use crate::scalar::Real;

/// Resource limits shared by the transport solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OtConfig {
    /// Largest admissible `|supp a| * |supp b|`.
    pub max_entries: usize,
    /// Cost tables up to this many entries are cached; larger ones are evaluated on demand.
    pub cache_entries: usize,
}

impl Default for OtConfig {
    fn default() -> Self {
        OtConfig {
            max_entries: 20_000 * 20_000,
            cache_entries: 1 << 25,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Integer supplies over a common denominator when both measures carry counts.
fn integer_masses<T: Real>(a: &BlockMeasure<T>, b: &BlockMeasure<T>) -> Option<(Vec<i64>, Vec<i64>, u64)> {
    let (ca, ta) = a.counts()?;
    let (cb, tb) = b.counts()?;
    let l = (ta / gcd(ta, tb)).checked_mul(tb)?;
    if l > 1 << 52 {
        return None;
    }
    let (sa, sb) = (l / ta, l / tb);
    let conv = |c: &[u64], s: u64| c.iter().map(|&x| (x * s) as i64).collect::<Vec<_>>();
    Some((conv(ca, sa), conv(cb, sb), l))
}

/// Exact optimal transport between two block measures.
///
/// Returns an optimal coupling with its value and an optimal dual pair.
/// Measures that came from counting windows are solved in exact integer
/// arithmetic over the common denominator of their masses.
pub fn solve_ot<T: Real>(
    a: &BlockMeasure<T>,
    b: &BlockMeasure<T>,
    cost: &dyn BlockCost<T>,
    cfg: &OtConfig,
) -> Result<TransportPlan<T>> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(Error::EmptyMeasure);
    }
    let needed = m.saturating_mul(n);
    if needed > cfg.max_entries {
        return Err(Error::BudgetExceeded {
            needed,
            budget: cfg.max_entries,
        });
    }
    let oracle = |i: usize, j: usize| cost.cost(&a.blocks()[i], &b.blocks()[j]);
    let check = |i: usize, j: usize, c: T| {
        if c.is_finite() && c >= T::zero() {
            Ok(c)
        } else {
            Err(Error::InvalidCost(i, j))
        }
    };

    if m == 1 || n == 1 {
        // The product coupling is the only one.
        let mut entries = Vec::with_capacity(m * n);
        let mut value = T::zero();
        let mut f = vec![T::zero(); m];
        let mut g = vec![T::zero(); n];
        for i in 0..m {
            for j in 0..n {
                let c = check(i, j, oracle(i, j))?;
                let mass = a.masses()[i] * b.masses()[j];
                value += mass * c;
                entries.push(PlanEntry { row: i, col: j, mass });
                if m == 1 {
                    g[j] = c;
                } else {
                    f[i] = c;
                }
            }
        }
        return TransportPlan::new(a.clone(), b.clone(), entries, value, Some((f, g)));
    }

    let mut max_cost = T::zero();
    let costs = if needed <= cfg.cache_entries {
        let mut t = Vec::with_capacity(needed);
        for i in 0..m {
            for j in 0..n {
                let c = check(i, j, oracle(i, j))?;
                max_cost = max_cost.max(c);
                t.push(c);
            }
        }
        Costs::Table(t)
    } else {
        for i in 0..m {
            for j in 0..n {
                max_cost = max_cost.max(check(i, j, oracle(i, j))?);
            }
        }
        Costs::Oracle(&oracle)
    };
    let eps = T::epsilon() * T::of(1e4) * max_cost.max(T::one());

    let (raw, f, mut g) = match integer_masses(a, b) {
        Some((sa, sb, l)) => {
            let sol = Simplex::<T, i64>::new(&sa, &sb, costs, eps).solve();
            let denom = T::from_u64(l).expect("denominator fits");
            let entries: Vec<_> = sol
                .entries
                .into_iter()
                .map(|(i, j, x)| (i, j, T::from_i64(x).expect("flow fits") / denom))
                .collect();
            (entries, sol.f, sol.g)
        }
        None => {
            let sol = Simplex::<T, T>::new(a.masses(), b.masses(), costs, eps).solve();
            (sol.entries, sol.f, sol.g)
        }
    };
    // Normalise the potentials so that f vanishes on the first atom.
    let shift = f[0];
    let f: Vec<T> = f.into_iter().map(|x| x - shift).collect();
    for x in g.iter_mut() {
        *x += shift;
    }
    let mut value = T::zero();
    let entries = raw
        .into_iter()
        .map(|(i, j, mass)| {
            value += mass * oracle(i, j);
            PlanEntry { row: i, col: j, mass }
        })
        .collect();
    TransportPlan::new(a.clone(), b.clone(), entries, value, Some((f, g)))
}

/// Optimal transport cost only.
pub fn ot_cost<T: Real>(
    a: &BlockMeasure<T>,
    b: &BlockMeasure<T>,
    cost: &dyn BlockCost<T>,
    cfg: &OtConfig,
) -> Result<T> {
    solve_ot(a, b, cost, cfg).map(|p| p.cost_value())
}

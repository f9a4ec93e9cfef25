use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::cost::BlockCost;
use crate::error::{Error, Result};
use crate::measure::{Block, BlockMeasure};
use crate::scalar::{xlogx, Real};

/// One atom of a coupling, indexing atoms of the row and column marginals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanEntry<T> {
    pub row: usize,
    pub col: usize,
    pub mass: T,
}

/// A coupling of two block measures together with its cost and, for exact
/// solutions, an optimal dual pair.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan<T> {
    rows: BlockMeasure<T>,
    cols: BlockMeasure<T>,
    entries: Vec<PlanEntry<T>>,
    cost_value: T,
    duals: Option<(Vec<T>, Vec<T>)>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct AtomRow<T> {
    pub block: Vec<String>,
    pub mass: T,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct PlanRow<T> {
    pub x_block: Vec<String>,
    pub y_block: Vec<String>,
    pub mass: T,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct Duals<T> {
    pub f: Vec<T>,
    pub g: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(deserialize = "T: serde::de::DeserializeOwned"))]
pub(crate) struct PlanFile<T> {
    pub x_tokens: Vec<String>,
    pub y_tokens: Vec<String>,
    pub x_marginal: Vec<AtomRow<T>>,
    pub y_marginal: Vec<AtomRow<T>>,
    pub rows: Vec<PlanRow<T>>,
    pub cost_value: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duals: Option<Duals<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginal_violation: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

fn block_tokens(a: &Alphabet, b: &[u8]) -> Vec<String> {
    b.iter().map(|&s| a.token(s).to_string()).collect()
}

fn parse_block(a: &Alphabet, toks: &[String]) -> Result<Block> {
    toks.iter()
        .enumerate()
        .map(|(position, t)| {
            a.id_of(t).ok_or_else(|| Error::UnknownToken {
                token: t.clone(),
                position,
            })
        })
        .collect()
}

fn measure_rows<T: Real>(m: &BlockMeasure<T>) -> Vec<AtomRow<T>> {
    m.iter()
        .map(|(b, p)| AtomRow {
            block: block_tokens(m.alphabet(), b),
            mass: p,
        })
        .collect()
}

fn measure_from_rows<T: Real>(a: &Alphabet, rows: &[AtomRow<T>]) -> Result<BlockMeasure<T>> {
    let k = rows.first().map_or(0, |r| r.block.len());
    let atoms = rows
        .iter()
        .map(|r| Ok((parse_block(a, &r.block)?, r.mass)))
        .collect::<Result<Vec<_>>>()?;
    BlockMeasure::new(a.clone(), k, atoms)
}

impl<T: Real> TransportPlan<T> {
    /// Assembles a plan; entries are sorted and the cost value is taken as given.
    pub fn new(
        rows: BlockMeasure<T>,
        cols: BlockMeasure<T>,
        mut entries: Vec<PlanEntry<T>>,
        cost_value: T,
        duals: Option<(Vec<T>, Vec<T>)>,
    ) -> Result<Self> {
        if let Some(e) = entries
            .iter()
            .find(|e| e.row >= rows.len() || e.col >= cols.len())
        {
            return Err(Error::InvalidParameter(format!(
                "plan entry ({}, {}) outside the marginals",
                e.row, e.col
            )));
        }
        if let Some((f, g)) = &duals {
            if f.len() != rows.len() || g.len() != cols.len() {
                return Err(Error::InvalidParameter("dual vector length".into()));
            }
        }
        entries.sort_by_key(|e| (e.row, e.col));
        Ok(TransportPlan {
            rows,
            cols,
            entries,
            cost_value,
            duals,
        })
    }

    /// The product coupling `a (x) b`.
    pub fn product(a: &BlockMeasure<T>, b: &BlockMeasure<T>, cost: &dyn BlockCost<T>) -> Self {
        let mut entries = Vec::with_capacity(a.len() * b.len());
        let mut value = T::zero();
        for (i, (u, p)) in a.iter().enumerate() {
            for (j, (v, q)) in b.iter().enumerate() {
                let mass = p * q;
                value += mass * cost.cost(u, v);
                entries.push(PlanEntry { row: i, col: j, mass });
            }
        }
        TransportPlan {
            rows: a.clone(),
            cols: b.clone(),
            entries,
            cost_value: value,
            duals: None,
        }
    }

    pub fn rows(&self) -> &BlockMeasure<T> {
        &self.rows
    }

    pub fn cols(&self) -> &BlockMeasure<T> {
        &self.cols
    }

    pub fn entries(&self) -> &[PlanEntry<T>] {
        &self.entries
    }

    /// `(x_block, y_block, mass)` triples in canonical order.
    pub fn atoms(&self) -> impl Iterator<Item = (&Block, &Block, T)> + '_ {
        self.entries
            .iter()
            .map(|e| (&self.rows.blocks()[e.row], &self.cols.blocks()[e.col], e.mass))
    }

    pub fn cost_value(&self) -> T {
        self.cost_value
    }

    pub fn duals(&self) -> Option<(&[T], &[T])> {
        self.duals.as_ref().map(|(f, g)| (f.as_slice(), g.as_slice()))
    }

    /// `sum f da + sum g db`, when duals are present.
    pub fn dual_value(&self) -> Option<T> {
        self.duals.as_ref().map(|(f, g)| {
            let a: T = f.iter().zip(self.rows.masses()).map(|(&x, &p)| x * p).sum();
            let b: T = g.iter().zip(self.cols.masses()).map(|(&x, &q)| x * q).sum();
            a + b
        })
    }

    /// Primal minus dual objective.
    pub fn dual_gap(&self) -> Option<T> {
        self.dual_value().map(|d| self.cost_value - d)
    }

    /// Largest `f(u) + g(v) - c(u, v)` over all pairs; nonpositive for feasible duals.
    pub fn max_dual_violation(&self, cost: &dyn BlockCost<T>) -> Option<T> {
        let (f, g) = self.duals()?;
        let mut worst = T::neg_infinity();
        for (i, u) in self.rows.blocks().iter().enumerate() {
            for (j, v) in self.cols.blocks().iter().enumerate() {
                worst = worst.max(f[i] + g[j] - cost.cost(u, v));
            }
        }
        Some(worst)
    }

    pub fn row_sums(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.rows.len()];
        for e in &self.entries {
            s[e.row] += e.mass;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.cols.len()];
        for e in &self.entries {
            s[e.col] += e.mass;
        }
        s
    }

    /// Larger of the two L1 distances between the plan's marginals and the targets.
    pub fn marginal_violation(&self) -> T {
        let r: T = self
            .row_sums()
            .iter()
            .zip(self.rows.masses())
            .map(|(&s, &p)| (s - p).abs())
            .sum();
        let c: T = self
            .col_sums()
            .iter()
            .zip(self.cols.masses())
            .map(|(&s, &p)| (s - p).abs())
            .sum();
        r.max(c)
    }

    /// `sum c dpi` recomputed from the entries.
    pub fn transport_cost(&self, cost: &dyn BlockCost<T>) -> T {
        self.atoms().map(|(u, v, p)| p * cost.cost(u, v)).sum()
    }

    /// Shannon entropy of the coupling in nats.
    pub fn entropy(&self) -> T {
        -self.entries.iter().map(|e| xlogx(e.mass)).sum::<T>()
    }

    pub(crate) fn to_file(&self) -> PlanFile<T> {
        let (xa, ya) = (self.rows.alphabet(), self.cols.alphabet());
        PlanFile {
            x_tokens: xa.tokens().to_vec(),
            y_tokens: ya.tokens().to_vec(),
            x_marginal: measure_rows(&self.rows),
            y_marginal: measure_rows(&self.cols),
            rows: self
                .atoms()
                .map(|(u, v, mass)| PlanRow {
                    x_block: block_tokens(xa, u),
                    y_block: block_tokens(ya, v),
                    mass,
                })
                .collect(),
            cost_value: self.cost_value,
            duals: self.duals.as_ref().map(|(f, g)| Duals {
                f: f.clone(),
                g: g.clone(),
            }),
            eta: None,
            iterations: None,
            marginal_violation: None,
            converged: None,
        }
    }

    pub(crate) fn from_file(f: &PlanFile<T>) -> Result<Self> {
        let xa = Alphabet::new(f.x_tokens.iter().cloned())?;
        let ya = Alphabet::new(f.y_tokens.iter().cloned())?;
        let rows = measure_from_rows(&xa, &f.x_marginal)?;
        let cols = measure_from_rows(&ya, &f.y_marginal)?;
        let entries = f
            .rows
            .iter()
            .map(|r| {
                let u = parse_block(&xa, &r.x_block)?;
                let v = parse_block(&ya, &r.y_block)?;
                let row = rows
                    .blocks()
                    .binary_search(&u)
                    .map_err(|_| Error::Parse("plan row outside the x marginal".into()))?;
                let col = cols
                    .blocks()
                    .binary_search(&v)
                    .map_err(|_| Error::Parse("plan row outside the y marginal".into()))?;
                Ok(PlanEntry {
                    row,
                    col,
                    mass: r.mass,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let duals = f.duals.as_ref().map(|d| (d.f.clone(), d.g.clone()));
        Self::new(rows, cols, entries, f.cost_value, duals)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }
}

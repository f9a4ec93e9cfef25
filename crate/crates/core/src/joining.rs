use std::collections::BTreeMap;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::cost::{BlockCost, CostSpec};
use crate::error::{Error, Result};
use crate::measure::{Block, BlockMeasure};
use crate::ot::plan::PlanFile;
use crate::ot::TransportPlan;
use crate::scalar::Real;
use crate::sequence::SymbolSequence;

/// Default cap on the support of a finite-dimensional marginal.
pub const DEFAULT_MARGINAL_BUDGET: usize = 1 << 22;

/// Deterministic filler appended after every coupled block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapBlock {
    pub x: Block,
    pub y: Block,
}

/// Stationary joining obtained by concatenating independent draws from a
/// block coupling (followed by an optional gap block) and averaging over the
/// starting phase.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockJoining<T> {
    plan: TransportPlan<T>,
    eta: T,
    gap: Option<GapBlock>,
}

#[derive(Serialize, Deserialize)]
struct GapFile {
    x: Vec<String>,
    y: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(deserialize = "T: serde::de::DeserializeOwned"))]
struct JoiningFile<T> {
    k: usize,
    g: usize,
    eta: T,
    plan: PlanFile<T>,
    gap_block: Option<GapFile>,
}

/// Law of `m` consecutive symbols of the process made of i.i.d. `law`-blocks,
/// started at a uniformly random phase.
pub fn stationary_block_marginal<T: Real>(
    law: &BlockMeasure<T>,
    m: usize,
    budget: usize,
) -> Result<BlockMeasure<T>> {
    if m == 0 {
        return Err(Error::ZeroBlockLength);
    }
    let p = law.k();
    let mut acc: BTreeMap<Block, T> = BTreeMap::new();
    let w = T::one() / T::of_usize(p);
    for s in 0..p {
        let phase = phase_marginal(law, s, m, budget)?;
        for (b, q) in phase.iter() {
            *acc.entry(b.clone()).or_insert_with(T::zero) += w * q;
        }
    }
    let (blocks, masses) = acc.into_iter().unzip();
    Ok(BlockMeasure::from_parts_unchecked(
        law.alphabet().clone(),
        m,
        blocks,
        masses,
    ))
}

/// Law of `m` consecutive symbols starting at offset `s` inside the first block.
pub fn phase_marginal<T: Real>(
    law: &BlockMeasure<T>,
    s: usize,
    m: usize,
    budget: usize,
) -> Result<BlockMeasure<T>> {
    let p = law.k();
    if s >= p {
        return Err(Error::InvalidParameter(format!("phase {s} outside period {p}")));
    }
    // Pieces: a suffix of the first block, whole blocks, a prefix of the last.
    let mut pieces = Vec::new();
    let mut pos = s;
    let end = s + m;
    while pos < end {
        let within = pos % p;
        let len = (p - within).min(end - pos);
        pieces.push((within, len));
        pos += len;
    }
    let pieces = pieces
        .into_iter()
        .map(|(st, len)| law.marginal_window(st, len))
        .collect::<Result<Vec<_>>>()?;
    let needed = pieces
        .iter()
        .try_fold(1usize, |acc, q| acc.checked_mul(q.len()))
        .unwrap_or(usize::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut out: Option<BlockMeasure<T>> = None;
    for piece in pieces {
        out = Some(match out {
            None => piece,
            Some(prev) => prev.concat(&piece)?,
        });
    }
    Ok(out.expect("m >= 1 gives at least one piece"))
}

impl<T: Real> BlockJoining<T> {
    /// Joining built from a block coupling and an optional gap block.
    pub fn new(plan: TransportPlan<T>, eta: T, gap: Option<GapBlock>) -> Result<Self> {
        let k = plan.rows().k();
        if plan.cols().k() != k {
            return Err(Error::BlockLength {
                expected: k,
                got: plan.cols().k(),
            });
        }
        if let Some(gb) = &gap {
            if gb.x.len() != gb.y.len() || gb.x.is_empty() {
                return Err(Error::InvalidParameter("gap blocks must share a positive length".into()));
            }
            let (nx, ny) = (plan.rows().alphabet().len(), plan.cols().alphabet().len());
            if let Some(&s) = gb.x.iter().find(|&&s| s as usize >= nx) {
                return Err(Error::SymbolOutOfRange(s));
            }
            if let Some(&s) = gb.y.iter().find(|&&s| s as usize >= ny) {
                return Err(Error::SymbolOutOfRange(s));
            }
        }
        if !(eta >= T::zero()) {
            return Err(Error::InvalidParameter("eta must be nonnegative".into()));
        }
        Ok(BlockJoining { plan, eta, gap })
    }

    pub fn k(&self) -> usize {
        self.plan.rows().k()
    }

    pub fn g(&self) -> usize {
        self.gap.as_ref().map_or(0, |g| g.x.len())
    }

    /// Length of one repeating unit, `k + g`.
    pub fn period(&self) -> usize {
        self.k() + self.g()
    }

    pub fn plan(&self) -> &TransportPlan<T> {
        &self.plan
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn gap(&self) -> Option<&GapBlock> {
        self.gap.as_ref()
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        self.plan.rows().alphabet()
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        self.plan.cols().alphabet()
    }

    /// Alphabet of symbol pairs, id `x * |Y| + y`.
    pub fn pair_alphabet(&self) -> Result<Alphabet> {
        Alphabet::product(self.x_alphabet(), self.y_alphabet())
    }

    fn pair_block(&self, x: &[u8], y: &[u8]) -> Block {
        let ny = self.y_alphabet().len();
        x.iter()
            .zip(y)
            .map(|(&a, &b)| (a as usize * ny + b as usize) as u8)
            .collect()
    }

    /// Law of one period over the pair alphabet: the coupling followed by the gap.
    pub fn superblock_law(&self) -> Result<BlockMeasure<T>> {
        let alpha = self.pair_alphabet()?;
        let tail = self
            .gap
            .as_ref()
            .map(|g| self.pair_block(&g.x, &g.y))
            .unwrap_or_default();
        let atoms = self.plan.atoms().map(|(u, v, p)| {
            let mut b = self.pair_block(u, v);
            b.extend_from_slice(&tail);
            (b, p)
        });
        BlockMeasure::from_weights(alpha, self.period(), atoms)
    }

    /// Exact `m`-dimensional marginal of the joining over the pair alphabet.
    pub fn finite_marginal(&self, m: usize) -> Result<BlockMeasure<T>> {
        self.finite_marginal_with_budget(m, DEFAULT_MARGINAL_BUDGET)
    }

    pub fn finite_marginal_with_budget(&self, m: usize, budget: usize) -> Result<BlockMeasure<T>> {
        stationary_block_marginal(&self.superblock_law()?, m, budget)
    }

    /// Projection of a pair-alphabet measure onto the `X` coordinates.
    pub fn project_x(&self, joint: &BlockMeasure<T>) -> Result<BlockMeasure<T>> {
        let ny = self.y_alphabet().len();
        joint.map_symbols(self.x_alphabet().clone(), |s| (s as usize / ny) as u8)
    }

    /// Projection of a pair-alphabet measure onto the `Y` coordinates.
    pub fn project_y(&self, joint: &BlockMeasure<T>) -> Result<BlockMeasure<T>> {
        let ny = self.y_alphabet().len();
        joint.map_symbols(self.y_alphabet().clone(), |s| (s as usize % ny) as u8)
    }

    /// `E c(X_1, Y_1)` under the joining.
    pub fn expected_cost(&self, c: &CostSpec<T>) -> Result<T> {
        if c.x_alphabet() != self.x_alphabet() || c.y_alphabet() != self.y_alphabet() {
            return Err(Error::AlphabetMismatch);
        }
        let coupled: T = self.plan.atoms().map(|(u, v, p)| p * c.cost(u, v)).sum();
        let gap = self.gap.as_ref().map_or(T::zero(), |g| c.cost(&g.x, &g.y));
        Ok((coupled + gap) / T::of_usize(self.period()))
    }

    /// `H(pi) / (k + g)`; the deterministic gap contributes no entropy.
    pub fn block_entropy_rate(&self) -> T {
        self.plan.entropy() / T::of_usize(self.period())
    }

    /// Draws a pair of aligned paths of length `n` from the joining.
    pub fn sample_trajectory<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<(SymbolSequence, SymbolSequence)> {
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        let weights: Vec<f64> = self.plan.entries().iter().map(|e| e.mass.to_f64_lossy()).collect();
        let dist = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidParameter(format!("plan weights: {e}")))?;
        let p = self.period();
        let phase = rng.gen_range(0..p);
        let (mut xs, mut ys) = (Vec::with_capacity(n + 2 * p), Vec::with_capacity(n + 2 * p));
        while xs.len() < phase + n {
            let e = self.plan.entries()[dist.sample(rng)];
            xs.extend_from_slice(&self.plan.rows().blocks()[e.row]);
            ys.extend_from_slice(&self.plan.cols().blocks()[e.col]);
            if let Some(g) = &self.gap {
                xs.extend_from_slice(&g.x);
                ys.extend_from_slice(&g.y);
            }
        }
        Ok((
            SymbolSequence::new(self.x_alphabet().clone(), xs[phase..phase + n].to_vec())?,
            SymbolSequence::new(self.y_alphabet().clone(), ys[phase..phase + n].to_vec())?,
        ))
    }

    pub fn to_json(&self) -> String {
        let tok = |a: &Alphabet, b: &[u8]| b.iter().map(|&s| a.token(s).to_string()).collect();
        let f = JoiningFile {
            k: self.k(),
            g: self.g(),
            eta: self.eta,
            plan: self.plan.to_file(),
            gap_block: self.gap.as_ref().map(|g| GapFile {
                x: tok(self.x_alphabet(), &g.x),
                y: tok(self.y_alphabet(), &g.y),
            }),
        };
        serde_json::to_string_pretty(&f).expect("joining serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: JoiningFile<T> = serde_json::from_str(text)?;
        let plan = TransportPlan::from_file(&f.plan)?;
        let parse = |a: &Alphabet, toks: &[String]| -> Result<Block> {
            toks.iter()
                .enumerate()
                .map(|(position, t)| {
                    a.id_of(t).ok_or_else(|| Error::UnknownToken {
                        token: t.clone(),
                        position,
                    })
                })
                .collect()
        };
        let gap = match &f.gap_block {
            Some(g) => Some(GapBlock {
                x: parse(plan.rows().alphabet(), &g.x)?,
                y: parse(plan.cols().alphabet(), &g.y)?,
            }),
            None => None,
        };
        let j = Self::new(plan, f.eta, gap)?;
        if j.k() != f.k || j.g() != f.g {
            return Err(Error::Parse("k or g disagrees with the plan".into()));
        }
        Ok(j)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Builds `Lambda^k[pi]`, or `Lambda^{k+g}[pi (x) delta_gap]` when `g > 0`.
pub fn build_joining<T: Real>(
    plan: TransportPlan<T>,
    eta: T,
    g: usize,
    gap: Option<GapBlock>,
) -> Result<BlockJoining<T>> {
    match (g, gap) {
        (0, None) => BlockJoining::new(plan, eta, None),
        (0, Some(_)) => Err(Error::InvalidParameter("gap block given with g = 0".into())),
        (_, None) => Err(Error::InvalidParameter("g > 0 requires a gap block".into())),
        (g, Some(b)) if b.x.len() != g => Err(Error::BlockLength {
            expected: g,
            got: b.x.len(),
        }),
        (_, Some(b)) => BlockJoining::new(plan, eta, Some(b)),
    }
}

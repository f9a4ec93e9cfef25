use std::collections::{BTreeMap, HashMap};

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::scalar::{xlogx, Real};
use crate::sequence::SymbolSequence;

/// A word of symbol ids. Byte-wise lexicographic order is the canonical block order.
pub type Block = Vec<u8>;

/// Finitely supported probability measure on `X^k`.
///
/// Atoms are kept sorted by block and have strictly positive mass. Measures
/// built from counts also remember the integer counts so that transport
/// solvers can work with exact rational masses.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMeasure<T> {
    alphabet: Alphabet,
    k: usize,
    blocks: Vec<Block>,
    masses: Vec<T>,
    counts: Option<(Vec<u64>, u64)>,
}

fn summation_slack<T: Real>(atoms: usize) -> f64 {
    T::MASS_TOL + 4.0 * T::epsilon().to_f64_lossy() * atoms as f64
}

impl<T: Real> BlockMeasure<T> {
    /// Builds a measure from `(block, mass)` pairs; duplicate blocks are merged
    /// and zero masses dropped. The total must be one up to rounding.
    pub fn new(
        alphabet: Alphabet,
        k: usize,
        atoms: impl IntoIterator<Item = (Block, T)>,
    ) -> Result<Self> {
        let m = Self::collect(&alphabet, k, atoms)?;
        let total: T = m.values().copied().sum();
        let total = total.to_f64_lossy();
        if (total - 1.0).abs() > summation_slack::<T>(m.len()) {
            return Err(Error::MassNotNormalized(total));
        }
        Ok(Self::from_sorted(alphabet, k, m))
    }

    /// Like [`BlockMeasure::new`] but rescales nonnegative weights to unit mass.
    pub fn from_weights(
        alphabet: Alphabet,
        k: usize,
        atoms: impl IntoIterator<Item = (Block, T)>,
    ) -> Result<Self> {
        let mut m = Self::collect(&alphabet, k, atoms)?;
        let total: T = m.values().copied().sum();
        if m.is_empty() || total <= T::zero() {
            return Err(Error::EmptyMeasure);
        }
        for v in m.values_mut() {
            *v /= total;
        }
        Ok(Self::from_sorted(alphabet, k, m))
    }

    pub fn point_mass(alphabet: Alphabet, block: Block) -> Result<Self> {
        let k = block.len();
        Self::new(alphabet, k, [(block, T::one())])
    }

    fn collect(
        alphabet: &Alphabet,
        k: usize,
        atoms: impl IntoIterator<Item = (Block, T)>,
    ) -> Result<BTreeMap<Block, T>> {
        if k == 0 {
            return Err(Error::ZeroBlockLength);
        }
        let mut m: BTreeMap<Block, T> = BTreeMap::new();
        for (b, w) in atoms {
            if b.len() != k {
                return Err(Error::BlockLength {
                    expected: k,
                    got: b.len(),
                });
            }
            if let Some(&s) = b.iter().find(|&&s| s as usize >= alphabet.len()) {
                return Err(Error::SymbolOutOfRange(s));
            }
            if !(w >= T::zero()) || !w.is_finite() {
                return Err(Error::InvalidMass(w.to_f64_lossy()));
            }
            if w > T::zero() {
                *m.entry(b).or_insert_with(T::zero) += w;
            }
        }
        if m.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Ok(m)
    }

    fn from_sorted(alphabet: Alphabet, k: usize, m: BTreeMap<Block, T>) -> Self {
        let (blocks, masses) = m.into_iter().unzip();
        BlockMeasure {
            alphabet,
            k,
            blocks,
            masses,
            counts: None,
        }
    }

    /// Measure with masses `counts[i] / total`; atoms must already be sorted and distinct.
    fn from_counts(alphabet: Alphabet, k: usize, mut atoms: Vec<(Block, u64)>) -> Self {
        atoms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let total: u64 = atoms.iter().map(|a| a.1).sum();
        let denom = T::from_u64(total).expect("count fits the scalar type");
        let mut blocks = Vec::with_capacity(atoms.len());
        let mut masses = Vec::with_capacity(atoms.len());
        let mut counts = Vec::with_capacity(atoms.len());
        for (b, c) in atoms {
            blocks.push(b);
            masses.push(T::from_u64(c).expect("count fits the scalar type") / denom);
            counts.push(c);
        }
        BlockMeasure {
            alphabet,
            k,
            blocks,
            masses,
            counts: Some((counts, total)),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    /// Integer counts and their total, when the measure came from counting windows.
    pub fn counts(&self) -> Option<(&[u64], u64)> {
        self.counts.as_ref().map(|(c, t)| (c.as_slice(), *t))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Block, T)> + '_ {
        self.blocks.iter().zip(self.masses.iter().copied())
    }

    pub fn mass_of(&self, block: &[u8]) -> T {
        match self.blocks.binary_search_by(|b| b.as_slice().cmp(block)) {
            Ok(i) => self.masses[i],
            Err(_) => T::zero(),
        }
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> T {
        -self.masses.iter().map(|&p| xlogx(p)).sum::<T>()
    }

    /// Law of the coordinates `start..start + len`.
    pub fn marginal_window(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.k {
            return Err(Error::InvalidParameter(format!(
                "window {start}..{} outside blocks of length {}",
                start + len,
                self.k
            )));
        }
        if start == 0 && len == self.k {
            return Ok(self.clone());
        }
        let mut m: BTreeMap<Block, T> = BTreeMap::new();
        for (b, p) in self.iter() {
            *m.entry(b[start..start + len].to_vec())
                .or_insert_with(T::zero) += p;
        }
        Ok(Self::from_sorted(self.alphabet.clone(), len, m))
    }

    /// Independent concatenation: the law of `(U, V)` with `U ~ self`, `V ~ other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        let mut blocks = Vec::with_capacity(self.len() * other.len());
        let mut masses = Vec::with_capacity(self.len() * other.len());
        // Lexicographic order is preserved by the nested loop.
        for (u, p) in self.iter() {
            for (v, q) in other.iter() {
                let mut b = Vec::with_capacity(u.len() + v.len());
                b.extend_from_slice(u);
                b.extend_from_slice(v);
                blocks.push(b);
                masses.push(p * q);
            }
        }
        Ok(BlockMeasure {
            alphabet: self.alphabet.clone(),
            k: self.k + other.k,
            blocks,
            masses,
            counts: None,
        })
    }

    /// Pushes the measure forward through a symbol-wise map into another alphabet.
    pub fn map_symbols(&self, alphabet: Alphabet, f: impl Fn(u8) -> u8) -> Result<Self> {
        Self::new(
            alphabet,
            self.k,
            self.iter()
                .map(|(b, p)| (b.iter().map(|&s| f(s)).collect(), p)),
        )
    }

    /// Converts masses to another scalar type.
    pub fn cast<U: Real>(&self) -> BlockMeasure<U> {
        BlockMeasure {
            alphabet: self.alphabet.clone(),
            k: self.k,
            blocks: self.blocks.clone(),
            masses: self
                .masses
                .iter()
                .map(|&p| U::of(p.to_f64_lossy()))
                .collect(),
            counts: self.counts.clone(),
        }
    }

    pub(crate) fn from_parts_unchecked(
        alphabet: Alphabet,
        k: usize,
        blocks: Vec<Block>,
        masses: Vec<T>,
    ) -> Self {
        BlockMeasure {
            alphabet,
            k,
            blocks,
            masses,
            counts: None,
        }
    }
}

/// Empirical law of the `n - k + 1` overlapping `k`-windows of a sequence.
pub fn empirical_block_measure<T: Real>(seq: &SymbolSequence, k: usize) -> Result<BlockMeasure<T>> {
    if k == 0 {
        return Err(Error::ZeroBlockLength);
    }
    let n = seq.len();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    if k > n {
        return Err(Error::KExceedsLength { k, n });
    }
    let mut counts: HashMap<&[u8], u64> = HashMap::new();
    for w in seq.symbols().windows(k) {
        *counts.entry(w).or_insert(0) += 1;
    }
    let atoms = counts.into_iter().map(|(b, c)| (b.to_vec(), c)).collect();
    Ok(BlockMeasure::from_counts(seq.alphabet().clone(), k, atoms))
}

/// Total-variation-style L1 distance `sum |a - b|`.
pub fn l1_distance<T: Real>(a: &BlockMeasure<T>, b: &BlockMeasure<T>) -> Result<T> {
    if a.alphabet() != b.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    if a.k() != b.k() {
        return Err(Error::BlockLength {
            expected: a.k(),
            got: b.k(),
        });
    }
    let (mut i, mut j) = (0, 0);
    let mut d = T::zero();
    let (ab, bb) = (a.blocks(), b.blocks());
    while i < ab.len() || j < bb.len() {
        let ord = match (ab.get(i), bb.get(j)) {
            (Some(x), Some(y)) => x.cmp(y),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        match ord {
            std::cmp::Ordering::Less => {
                d += a.masses()[i];
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                d += b.masses()[j];
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                d += (a.masses()[i] - b.masses()[j]).abs();
                i += 1;
                j += 1;
            }
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::ingest;

    fn bin() -> Alphabet {
        Alphabet::new(["0", "1"]).unwrap()
    }

    #[test]
    fn two_block_law_of_short_binary_word() {
        let s = ingest("0 1 1 0 1", Some(&bin())).unwrap();
        let m = empirical_block_measure::<f64>(&s, 2).unwrap();
        assert_eq!(m.blocks(), [vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(m.masses(), [0.5, 0.25, 0.25]);
        assert_eq!(m.counts(), Some((&[2u64, 1, 1][..], 4)));
    }

    #[test]
    fn full_length_window_is_a_point_mass() {
        let s = ingest("0 1 1 0", Some(&bin())).unwrap();
        let m = empirical_block_measure::<f64>(&s, 4).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.masses(), [1.0]);
    }

    #[test]
    fn k_larger_than_n_is_rejected() {
        let s = ingest("0 1", Some(&bin())).unwrap();
        assert_eq!(
            empirical_block_measure::<f64>(&s, 3),
            Err(Error::KExceedsLength { k: 3, n: 2 })
        );
    }

    #[test]
    fn l1_of_disjoint_point_masses_is_two() {
        let a = BlockMeasure::<f64>::point_mass(bin(), vec![0]).unwrap();
        let b = BlockMeasure::<f64>::point_mass(bin(), vec![1]).unwrap();
        assert_eq!(l1_distance(&a, &b).unwrap(), 2.0);
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn uniform_entropy_is_log_size() {
        let m = BlockMeasure::<f64>::new(
            bin(),
            2,
            [(vec![0, 0], 0.25), (vec![0, 1], 0.25), (vec![1, 0], 0.25), (vec![1, 1], 0.25)],
        )
        .unwrap();
        assert!((m.entropy() - 4f64.ln()).abs() < 1e-15);
        let p = BlockMeasure::<f64>::point_mass(bin(), vec![1, 0]).unwrap();
        assert_eq!(p.entropy(), 0.0);
    }

    #[test]
    fn validation() {
        assert_eq!(
            BlockMeasure::<f64>::new(bin(), 1, [(vec![0], 0.6), (vec![1], 0.6)]),
            Err(Error::MassNotNormalized(1.2))
        );
        assert!(matches!(
            BlockMeasure::<f64>::new(bin(), 1, [(vec![0], -0.5), (vec![1], 1.5)]),
            Err(Error::InvalidMass(_))
        ));
        assert!(matches!(
            BlockMeasure::<f64>::new(bin(), 1, [(vec![2], 1.0)]),
            Err(Error::SymbolOutOfRange(2))
        ));
    }

    #[test]
    fn windows_and_concat() {
        let m = BlockMeasure::<f64>::new(bin(), 2, [(vec![0, 1], 0.5), (vec![1, 1], 0.5)]).unwrap();
        let first = m.marginal_window(0, 1).unwrap();
        assert_eq!(first.masses(), [0.5, 0.5]);
        let second = m.marginal_window(1, 1).unwrap();
        assert_eq!(second.blocks(), [vec![1]]);
        let c = first.concat(&second).unwrap();
        assert_eq!(c.k(), 2);
        assert_eq!(c.blocks(), [vec![0, 1], vec![1, 1]]);
    }
}

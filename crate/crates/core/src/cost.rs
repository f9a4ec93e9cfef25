use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Cost between blocks of equal length.
pub trait BlockCost<T: Real>: Sync {
    fn cost(&self, x: &[u8], y: &[u8]) -> T;

    /// The single-letter cost when this cost is the coordinate-wise sum of one.
    fn single_letter(&self) -> Option<&CostSpec<T>> {
        None
    }
}

/// Wraps an arbitrary function of two blocks.
pub struct FnCost<F>(pub F);

impl<T: Real, F: Fn(&[u8], &[u8]) -> T + Sync> BlockCost<T> for FnCost<F> {
    fn cost(&self, x: &[u8], y: &[u8]) -> T {
        (self.0)(x, y)
    }
}

/// Single-letter cost `c: X x Y -> [0, inf)`.
///
/// As a [`BlockCost`] it acts on `k`-blocks by summing over coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CostSpec<T> {
    x: Alphabet,
    y: Alphabet,
    matrix: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct CostFile<T> {
    x_tokens: Vec<String>,
    y_tokens: Vec<String>,
    matrix: Vec<Vec<T>>,
}

impl<T: Real> CostSpec<T> {
    pub fn new(x: Alphabet, y: Alphabet, rows: Vec<Vec<T>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.len() != x.len() || rows.iter().any(|r| r.len() != y.len()) {
            return Err(Error::CostShape {
                rows: rows.len(),
                cols,
                expected_rows: x.len(),
                expected_cols: y.len(),
            });
        }
        let mut matrix = Vec::with_capacity(x.len() * y.len());
        for (i, r) in rows.into_iter().enumerate() {
            for (j, c) in r.into_iter().enumerate() {
                if !c.is_finite() || c < T::zero() {
                    return Err(Error::InvalidCost(i, j));
                }
                matrix.push(c);
            }
        }
        Ok(CostSpec { x, y, matrix })
    }

    /// Hamming cost on a single alphabet.
    pub fn hamming(alphabet: &Alphabet) -> Self {
        Self::hamming_between(alphabet, alphabet)
    }

    /// Hamming cost across two alphabets: zero exactly when the tokens agree.
    pub fn hamming_between(x: &Alphabet, y: &Alphabet) -> Self {
        let mut matrix = Vec::with_capacity(x.len() * y.len());
        for a in x.tokens() {
            for b in y.tokens() {
                matrix.push(if a == b { T::zero() } else { T::one() });
            }
        }
        CostSpec {
            x: x.clone(),
            y: y.clone(),
            matrix,
        }
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }

    #[inline]
    pub fn get(&self, x: u8, y: u8) -> T {
        self.matrix[x as usize * self.y.len() + y as usize]
    }

    /// Row-major `|X| x |Y|` entries.
    pub fn matrix(&self) -> &[T] {
        &self.matrix
    }

    pub fn sup_norm(&self) -> T {
        self.matrix.iter().copied().fold(T::zero(), T::max)
    }

    /// The adapted cost `c_X(x, x') = max_y |c(x, y) - c(x', y)|` on `X x X`.
    pub fn adapted(&self) -> CostSpec<T> {
        let (nx, ny) = (self.x.len(), self.y.len());
        let mut matrix = Vec::with_capacity(nx * nx);
        for a in 0..nx {
            for b in 0..nx {
                let d = (0..ny)
                    .map(|y| (self.matrix[a * ny + y] - self.matrix[b * ny + y]).abs())
                    .fold(T::zero(), T::max);
                matrix.push(d);
            }
        }
        CostSpec {
            x: self.x.clone(),
            y: self.x.clone(),
            matrix,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: CostFile<T> = serde_json::from_str(text)?;
        Self::new(Alphabet::new(f.x_tokens)?, Alphabet::new(f.y_tokens)?, f.matrix)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let ny = self.y.len();
        let f = CostFile {
            x_tokens: self.x.tokens().to_vec(),
            y_tokens: self.y.tokens().to_vec(),
            matrix: self.matrix.chunks(ny).map(<[T]>::to_vec).collect(),
        };
        serde_json::to_string_pretty(&f).expect("cost serializes")
    }

    /// Re-indexes the cost onto other alphabets by token name.
    pub fn restrict(&self, x: &Alphabet, y: &Alphabet) -> Result<Self> {
        let xi: Vec<u8> = x
            .tokens()
            .iter()
            .enumerate()
            .map(|(p, t)| {
                self.x.id_of(t).ok_or_else(|| Error::UnknownToken {
                    token: t.clone(),
                    position: p,
                })
            })
            .collect::<Result<_>>()?;
        let yi: Vec<u8> = y
            .tokens()
            .iter()
            .enumerate()
            .map(|(p, t)| {
                self.y.id_of(t).ok_or_else(|| Error::UnknownToken {
                    token: t.clone(),
                    position: p,
                })
            })
            .collect::<Result<_>>()?;
        let mut matrix = Vec::with_capacity(xi.len() * yi.len());
        for &a in &xi {
            for &b in &yi {
                matrix.push(self.get(a, b));
            }
        }
        Ok(CostSpec {
            x: x.clone(),
            y: y.clone(),
            matrix,
        })
    }
}

impl<T: Real> BlockCost<T> for CostSpec<T> {
    #[inline]
    fn cost(&self, x: &[u8], y: &[u8]) -> T {
        debug_assert_eq!(x.len(), y.len());
        let mut s = T::zero();
        for (&a, &b) in x.iter().zip(y) {
            s += self.get(a, b);
        }
        s
    }

    fn single_letter(&self) -> Option<&CostSpec<T>> {
        Some(self)
    }
}

/// The `k`-step additive cost of `c` on a pair of blocks.
pub fn k_step_cost<T: Real>(c: &CostSpec<T>, x: &[u8], y: &[u8]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::BlockLength {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(c.cost(x, y))
}

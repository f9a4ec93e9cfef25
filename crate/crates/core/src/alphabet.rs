use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Finite ordered set of string tokens; symbol ids are positions in the order.
#[derive(Clone, Debug)]
pub struct Alphabet {
    tokens: Arc<[String]>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        if tokens.len() > 256 {
            return Err(Error::AlphabetTooLarge(tokens.len()));
        }
        let mut seen = HashMap::with_capacity(tokens.len());
        for t in &tokens {
            if seen.insert(t.as_str(), ()).is_some() {
                return Err(Error::DuplicateToken(t.clone()));
            }
        }
        Ok(Alphabet {
            tokens: tokens.into(),
        })
    }

    /// Reads one token per line, skipping blank lines.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u8) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id_of(&self, token: &str) -> Option<u8> {
        self.tokens.iter().position(|t| t == token).map(|i| i as u8)
    }

    pub fn index(&self) -> HashMap<&str, u8> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u8))
            .collect()
    }

    /// Alphabet of pairs, id `x * |Y| + y`.
    pub fn product(x: &Alphabet, y: &Alphabet) -> Result<Alphabet> {
        let size = x.len() * y.len();
        if size > 256 {
            return Err(Error::AlphabetTooLarge(size));
        }
        let mut tokens = Vec::with_capacity(size);
        for a in x.tokens.iter() {
            for b in y.tokens.iter() {
                tokens.push(format!("{a}|{b}"));
            }
        }
        Alphabet::new(tokens)
    }
}

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.tokens, &other.tokens) || self.tokens == other.tokens
    }
}

impl Eq for Alphabet {}

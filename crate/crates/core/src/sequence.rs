use std::path::Path;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

/// Finite sample path over an alphabet, stored as symbol ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolSequence {
    alphabet: Alphabet,
    symbols: Vec<u8>,
}

impl SymbolSequence {
    pub fn new(alphabet: Alphabet, symbols: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = symbols.iter().find(|&&s| s as usize >= alphabet.len()) {
            return Err(Error::SymbolOutOfRange(bad));
        }
        Ok(SymbolSequence { alphabet, symbols })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> + '_ {
        self.symbols.iter().map(|&s| self.alphabet.token(s))
    }

    /// Tokens joined by single spaces, the on-disk sequence format.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.symbols.len() * 2);
        for (i, t) in self.tokens().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(t);
        }
        out.push('\n');
        out
    }
}

/// Parses whitespace-separated tokens.
///
/// With an explicit alphabet every token must belong to it. Without one the
/// alphabet is the distinct tokens in order of first occurrence.
pub fn ingest(text: &str, alphabet: Option<&Alphabet>) -> Result<SymbolSequence> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(Error::EmptySequence);
    }
    let alphabet = match alphabet {
        Some(a) => a.clone(),
        None => {
            let mut seen = std::collections::HashSet::new();
            let distinct: Vec<&str> = tokens.iter().copied().filter(|t| seen.insert(*t)).collect();
            Alphabet::new(distinct)?
        }
    };
    let index = alphabet.index();
    let symbols = tokens
        .iter()
        .enumerate()
        .map(|(position, t)| {
            index.get(t).copied().ok_or_else(|| Error::UnknownToken {
                token: (*t).to_string(),
                position,
            })
        })
        .collect::<Result<Vec<u8>>>()?;
    Ok(SymbolSequence { alphabet, symbols })
}

pub fn read_sequence(path: impl AsRef<Path>, alphabet: Option<&Alphabet>) -> Result<SymbolSequence> {
    ingest(&std::fs::read_to_string(path)?, alphabet)
}

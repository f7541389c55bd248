use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::bsc::{bundle, BitHypervector, ItemMemory, Rng};
use crate::{Error, Result};

/// Lowercase letters, digits and the symbols that show up in language tags
/// and place names.
pub const DEFAULT_ALPHABET: &str = "abcdefghijklmnopqrstuvwxyz0123456789-_ .,'&/()#@:+";

/// Character basis vectors for lexical encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphabetMemory {
    symbols: String,
    memory: ItemMemory,
}

impl AlphabetMemory {
    /// One random vector per distinct character of `symbols`, in order.
    pub fn new(symbols: &str, dim: usize, rng: &mut Rng) -> Result<Self> {
        let mut memory = ItemMemory::new(dim)?;
        let mut kept = String::new();
        for c in symbols.chars() {
            if memory.get(c.encode_utf8(&mut [0; 4])).is_some() {
                continue;
            }
            let v = BitHypervector::random(dim, rng)?;
            memory.insert(c.to_string(), v)?;
            kept.push(c);
        }
        if memory.is_empty() {
            return Err(Error::Empty("alphabet"));
        }
        Ok(Self {
            symbols: kept,
            memory,
        })
    }

    pub fn symbols(&self) -> &str {
        &self.symbols
    }

    pub fn dim(&self) -> usize {
        self.memory.dim()
    }

    pub fn memory(&self) -> &ItemMemory {
        &self.memory
    }

    pub fn char_vector(&self, c: char) -> Result<&BitHypervector> {
        self.memory.lookup(c.encode_utf8(&mut [0; 4]))
    }
}

/// Trim and lowercase.
pub fn normalize_lexical(text: &str) -> String {
    text.trim().to_lowercase()
}

/// Bundle of the per-character basis vectors of the normalized text,
/// repeated characters voting once per occurrence.
pub fn encode_lexical(text: &str, alphabet: &AlphabetMemory, rng: &mut Rng) -> Result<BitHypervector> {
    let norm = normalize_lexical(text);
    if norm.is_empty() {
        return Err(Error::Empty("lexical text"));
    }
    let vectors = norm
        .chars()
        .map(|c| alphabet.char_vector(c))
        .collect::<Result<Vec<_>>>()?;
    bundle(&vectors, rng)
}

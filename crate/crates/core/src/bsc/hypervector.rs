use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::Rng;
use crate::{Error, Result};

pub const WORD_BITS: usize = 64;

/// Validates a hypervector width: positive multiple of 64.
pub fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || !dim.is_multiple_of(WORD_BITS) {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(())
}

/// Fixed-width packed binary vector.
///
/// Bit `i` is bit `i % 64` of word `i / 64`; words are stored in ascending
/// order, which is also the little-endian on-disk order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitHypervector {
    dim: usize,
    words: Vec<u64>,
}

impl BitHypervector {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            words: vec![0; dim / WORD_BITS],
        })
    }

    pub fn ones(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            words: vec![u64::MAX; dim / WORD_BITS],
        })
    }

    /// Each bit independently Bernoulli(0.5), one `u64` draw per word.
    pub fn random(dim: usize, rng: &mut Rng) -> Result<Self> {
        check_dim(dim)?;
        let words = (0..dim / WORD_BITS).map(|_| rng.next_u64()).collect();
        Ok(Self { dim, words })
    }

    pub fn from_words(dim: usize, words: Vec<u64>) -> Result<Self> {
        check_dim(dim)?;
        if words.len() != dim / WORD_BITS {
            return Err(Error::LengthMismatch {
                expected: dim / WORD_BITS,
                found: words.len(),
            });
        }
        Ok(Self { dim, words })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn into_words(self) -> Vec<u64> {
        self.words
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set_bit(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip_bit(&mut self, i: usize) {
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn complement(&self) -> Self {
        Self {
            dim: self.dim,
            words: self.words.iter().map(|w| !w).collect(),
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    /// XOR binding.
    pub fn bind(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            dim: self.dim,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    /// Number of differing bits.
    pub fn hamming_bits(&self, other: &Self) -> Result<u32> {
        self.check_same(other)?;
        Ok(hamming_bits_words(&self.words, &other.words))
    }

    /// Normalized Hamming distance in `[0, 1]`.
    pub fn hamming(&self, other: &Self) -> Result<f64> {
        Ok(self.hamming_bits(other)? as f64 / self.dim as f64)
    }
}

#[inline]
pub fn hamming_bits_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

impl fmt::Debug for BitHypervector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitHypervector({} bits, ", self.dim)?;
        for w in self.words.iter().take(2) {
            write!(f, "{w:016x}")?;
        }
        if self.words.len() > 2 {
            write!(f, "..")?;
        }
        write!(f, ")")
    }
}

pub fn bind(a: &BitHypervector, b: &BitHypervector) -> Result<BitHypervector> {
    a.bind(b)
}

pub fn hamming(a: &BitHypervector, b: &BitHypervector) -> Result<f64> {
    a.hamming(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dims() {
        assert_eq!(BitHypervector::zeros(0), Err(Error::InvalidDimension(0)));
        assert_eq!(BitHypervector::zeros(100), Err(Error::InvalidDimension(100)));
        let mut rng = Rng::from_seed(1);
        assert!(BitHypervector::random(65, &mut rng).is_err());
        assert!(BitHypervector::random(128, &mut rng).is_ok());
    }

    #[test]
    fn bit_layout_is_little_endian_words() {
        let mut v = BitHypervector::zeros(128).unwrap();
        v.set_bit(0, true);
        v.set_bit(65, true);
        assert_eq!(v.words(), &[1, 2]);
        assert!(v.bit(65));
        v.flip_bit(65);
        assert!(!v.bit(65));
    }

    #[test]
    fn identity_and_complement_distances() {
        let mut rng = Rng::from_seed(3);
        let v = BitHypervector::random(10240, &mut rng).unwrap();
        assert_eq!(hamming(&v, &v).unwrap(), 0.0);
        assert_eq!(hamming(&v, &v.complement()).unwrap(), 1.0);
    }

    #[test]
    fn bind_laws() {
        let mut rng = Rng::from_seed(4);
        let x = BitHypervector::random(1024, &mut rng).unwrap();
        let a = BitHypervector::random(1024, &mut rng).unwrap();
        let zeros = BitHypervector::zeros(1024).unwrap();
        assert_eq!(bind(&x, &bind(&x, &a).unwrap()).unwrap(), a);
        assert_eq!(bind(&x, &x).unwrap(), zeros);
        assert_eq!(bind(&x, &zeros).unwrap(), x);
    }

    #[test]
    fn mismatched_dims_error() {
        let a = BitHypervector::zeros(64).unwrap();
        let b = BitHypervector::zeros(128).unwrap();
        assert!(matches!(a.bind(&b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(a.hamming(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn same_seed_same_vectors() {
        let mut r1 = Rng::from_seed(11);
        let mut r2 = Rng::from_seed(11);
        for _ in 0..3 {
            assert_eq!(
                BitHypervector::random(1024, &mut r1).unwrap(),
                BitHypervector::random(1024, &mut r2).unwrap()
            );
        }
    }
}

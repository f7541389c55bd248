use alloc::vec;
use alloc::vec::Vec;

use super::{BitHypervector, Rng, WORD_BITS};
use crate::{Error, Result};

/// Per-bit vote counter behind [`bundle`] and [`bundle_weighted`].
///
/// A vector added with weight `w` casts `w` votes for each of its set bits.
/// Exact ties (only possible when the total weight is even) take the
/// corresponding bit of a tie-break vector drawn from the caller's rng.
#[derive(Clone, Debug)]
pub struct Accumulator {
    dim: usize,
    counts: Vec<u32>,
    total: u32,
}

impl Accumulator {
    pub fn new(dim: usize) -> Result<Self> {
        super::check_dim(dim)?;
        Ok(Self {
            dim,
            counts: vec![0; dim],
            total: 0,
        })
    }

    pub fn total_weight(&self) -> u32 {
        self.total
    }

    pub fn add(&mut self, v: &BitHypervector, weight: u32) -> Result<()> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim(),
            });
        }
        if weight == 0 {
            return Ok(());
        }
        for (w, &word) in v.words().iter().enumerate() {
            let base = w * WORD_BITS;
            let mut bits = word;
            while bits != 0 {
                let tz = bits.trailing_zeros() as usize;
                self.counts[base + tz] += weight;
                bits &= bits - 1;
            }
        }
        self.total += weight;
        Ok(())
    }

    /// Majority vote. Consumes one random hypervector from `rng` when the
    /// total weight is even, nothing otherwise.
    pub fn finish(&self, rng: &mut Rng) -> Result<BitHypervector> {
        if self.total == 0 {
            return Err(Error::Empty("bundle"));
        }
        let tie = if self.total.is_multiple_of(2) {
            Some(BitHypervector::random(self.dim, rng)?)
        } else {
            None
        };
        let mut out = BitHypervector::zeros(self.dim)?;
        for (i, &c) in self.counts.iter().enumerate() {
            let twice = 2 * c;
            let bit = if twice > self.total {
                true
            } else if twice < self.total {
                false
            } else {
                tie.as_ref().is_some_and(|t| t.bit(i))
            };
            if bit {
                out.set_bit(i, true);
            }
        }
        Ok(out)
    }
}

/// Per-bit majority over `vectors`, duplicates counted as independent votes.
pub fn bundle(vectors: &[&BitHypervector], rng: &mut Rng) -> Result<BitHypervector> {
    let first = vectors.first().ok_or(Error::Empty("bundle"))?;
    let mut acc = Accumulator::new(first.dim())?;
    for v in vectors {
        acc.add(v, 1)?;
    }
    acc.finish(rng)
}

/// Weighted majority: a vector with weight `w` counts as `w` votes and weight
/// 0 leaves it out. At least one weight must be non-zero.
pub fn bundle_weighted(items: &[(&BitHypervector, u32)], rng: &mut Rng) -> Result<BitHypervector> {
    let (first, _) = items.first().ok_or(Error::Empty("bundle"))?;
    let mut acc = Accumulator::new(first.dim())?;
    for (v, w) in items {
        acc.add(v, *w)?;
    }
    acc.finish(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsc::hamming;

    fn rand_vecs(n: usize, dim: usize, seed: u64) -> Vec<BitHypervector> {
        let mut rng = Rng::from_seed(seed);
        (0..n).map(|_| BitHypervector::random(dim, &mut rng).unwrap()).collect()
    }

    #[test]
    fn singleton_is_identity() {
        let v = rand_vecs(1, 1024, 1).remove(0);
        let mut rng = Rng::from_seed(0);
        assert_eq!(bundle(&[&v], &mut rng).unwrap(), v);
    }

    #[test]
    fn two_of_three_majority() {
        let vs = rand_vecs(2, 1024, 2);
        let mut rng = Rng::from_seed(0);
        assert_eq!(bundle(&[&vs[0], &vs[0], &vs[1]], &mut rng).unwrap(), vs[0]);
    }

    #[test]
    fn empty_and_mismatch_errors() {
        let mut rng = Rng::from_seed(0);
        assert_eq!(bundle(&[], &mut rng), Err(Error::Empty("bundle")));
        let a = BitHypervector::zeros(64).unwrap();
        let b = BitHypervector::zeros(128).unwrap();
        assert!(matches!(
            bundle(&[&a, &b], &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(
            bundle_weighted(&[(&a, 0)], &mut rng),
            Err(Error::Empty("bundle"))
        );
    }

    #[test]
    fn weight_zero_excludes_and_weight_counts_votes() {
        let vs = rand_vecs(3, 1024, 5);
        let mut rng = Rng::from_seed(0);
        let only_a = bundle_weighted(&[(&vs[0], 1), (&vs[1], 0)], &mut rng).unwrap();
        assert_eq!(only_a, vs[0]);
        let heavy = bundle_weighted(&[(&vs[0], 3), (&vs[1], 1), (&vs[2], 1)], &mut rng).unwrap();
        assert_eq!(heavy, vs[0]);
    }

    #[test]
    fn ties_follow_seeded_stream() {
        let vs = rand_vecs(2, 1024, 9);
        let a = bundle(&[&vs[0], &vs[1]], &mut Rng::from_seed(42)).unwrap();
        let b = bundle(&[&vs[0], &vs[1]], &mut Rng::from_seed(42)).unwrap();
        assert_eq!(a, b);
        // agreeing bits are kept, disagreeing bits are coin flips
        for i in 0..1024 {
            if vs[0].bit(i) == vs[1].bit(i) {
                assert_eq!(a.bit(i), vs[0].bit(i));
            }
        }
        let c = bundle(&[&vs[0], &vs[1]], &mut Rng::from_seed(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn majority_of_three_is_quarter_away_from_members() {
        // P(majority == member bit) = 3/4
        let mut total = 0.0;
        let trials = 20;
        for t in 0..trials {
            let vs = rand_vecs(3, 10240, 100 + t);
            let b = bundle(&[&vs[0], &vs[1], &vs[2]], &mut Rng::from_seed(0)).unwrap();
            let d = hamming(&b, &vs[0]).unwrap();
            assert!((d - 0.25).abs() < 0.02, "distance {d}");
            total += d;
        }
        assert!((total / trials as f64 - 0.25).abs() < 0.005);
    }

    #[test]
    fn member_distance_grows_with_bundle_size() {
        let mut prev = 0.0;
        for n in [3usize, 5, 7, 9] {
            let vs = rand_vecs(n, 10240, 7 + n as u64);
            let refs: Vec<&BitHypervector> = vs.iter().collect();
            let b = bundle(&refs, &mut Rng::from_seed(1)).unwrap();
            let mean: f64 =
                vs.iter().map(|v| hamming(&b, v).unwrap()).sum::<f64>() / n as f64;
            assert!(mean < 0.5 && mean > prev, "n={n} mean={mean}");
            prev = mean;
        }
    }
}

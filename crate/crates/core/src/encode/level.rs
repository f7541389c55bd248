use alloc::vec::Vec;

use crate::bsc::{check_dim, BitHypervector, Rng};
use crate::{Error, Result};

/// Ordered family `L_1..L_m` whose distance from `L_1` grows linearly.
///
/// Built by choosing a random set of `span` bit positions, cutting it into
/// `m − 1` nearly equal disjoint chunks and flipping one more chunk at each
/// step. With the default span of `dim / 2`, `L_m` sits at exactly 0.5.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelSequence {
    levels: Vec<BitHypervector>,
    /// Cumulative flipped bits from `L_1` to each level.
    flips: Vec<u32>,
}

impl LevelSequence {
    pub fn new(m: usize, dim: usize, rng: &mut Rng) -> Result<Self> {
        Self::with_span(m, dim, dim / 2, rng)
    }

    /// Level sequence flipping `span` bits in total between `L_1` and `L_m`.
    pub fn with_span(m: usize, dim: usize, span: usize, rng: &mut Rng) -> Result<Self> {
        check_dim(dim)?;
        if m < 2 {
            return Err(Error::InvalidParameter(alloc::format!(
                "level count {m} must be at least 2"
            )));
        }
        if span > dim || span < m - 1 {
            return Err(Error::InvalidParameter(alloc::format!(
                "{m} levels need at least {} flippable bits, have {span}",
                m - 1
            )));
        }
        let first = BitHypervector::random(dim, rng)?;
        let mut positions: Vec<usize> = (0..dim).collect();
        rng.shuffle(&mut positions);
        positions.truncate(span);

        let steps = m - 1;
        let mut levels = Vec::with_capacity(m);
        let mut flips = Vec::with_capacity(m);
        levels.push(first);
        flips.push(0);
        for k in 0..steps {
            let lo = k * span / steps;
            let hi = (k + 1) * span / steps;
            let mut next = levels[k].clone();
            for &p in &positions[lo..hi] {
                next.flip_bit(p);
            }
            levels.push(next);
            flips.push(hi as u32);
        }
        Ok(Self { levels, flips })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.levels[0].dim()
    }

    /// Zero-based access: `level(0)` is `L_1`.
    pub fn level(&self, i: usize) -> &BitHypervector {
        &self.levels[i]
    }

    pub fn levels(&self) -> &[BitHypervector] {
        &self.levels
    }

    /// Bits that differ between levels `i` and `j` (zero-based).
    pub fn flips_between(&self, i: usize, j: usize) -> u32 {
        self.flips[i].abs_diff(self.flips[j])
    }

    /// Middle element, `L_{(m+1)/2}` for odd `m`.
    pub fn middle(&self) -> &BitHypervector {
        &self.levels[(self.levels.len() - 1) / 2]
    }

    /// Zero-based window index of `value` in `[lo, hi]`: the range is cut
    /// into `m` equal windows, values outside are clamped, `hi` maps to the
    /// last level.
    pub fn index_for(&self, value: f64, lo: f64, hi: f64) -> Result<usize> {
        quantize(value, lo, hi, self.levels.len())
    }

    pub fn lookup(&self, value: f64, lo: f64, hi: f64) -> Result<&BitHypervector> {
        Ok(&self.levels[self.index_for(value, lo, hi)?])
    }
}

pub(crate) fn quantize(value: f64, lo: f64, hi: f64, m: usize) -> Result<usize> {
    if value.is_nan() || lo.is_nan() || hi.is_nan() {
        return Err(Error::DegenerateInput("NaN level value"));
    }
    if lo >= hi {
        return Err(Error::InvalidParameter(alloc::format!(
            "level range [{lo}, {hi}] is empty"
        )));
    }
    let v = value.clamp(lo, hi);
    let frac = (v - lo) / (hi - lo);
    // truncation is floor for non-negative values
    let idx = (frac * m as f64) as usize;
    Ok(idx.min(m - 1))
}

pub fn level_lookup(
    seq: &LevelSequence,
    value: f64,
    lo: f64,
    hi: f64,
) -> Result<&BitHypervector> {
    seq.lookup(value, lo, hi)
}

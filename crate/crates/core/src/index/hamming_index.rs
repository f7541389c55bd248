use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::string::String;
use alloc::vec::Vec;

use crate::bsc::{check_dim, BitHypervector, WORD_BITS};
use crate::{Error, Result};

/// Words summed between early-exit checks.
const BLOCK_WORDS: usize = 16;

/// Row-major packed store of equal-width hypervectors with external ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HammingIndex {
    label: String,
    dim: usize,
    words_per_row: usize,
    data: Vec<u64>,
    ids: Vec<String>,
    rows_by_id: BTreeMap<String, usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchHit<'a> {
    pub id: &'a str,
    pub row: usize,
    pub bits: u32,
    /// `bits / dim`.
    pub distance: f64,
}

impl HammingIndex {
    pub fn new(label: impl Into<String>, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            label: label.into(),
            dim,
            words_per_row: dim / WORD_BITS,
            data: Vec::new(),
            ids: Vec::new(),
            rows_by_id: BTreeMap::new(),
        })
    }

    /// Builds an index; insertion order is the tie-break order.
    pub fn build<I, S>(label: impl Into<String>, dim: usize, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, BitHypervector)>,
        S: Into<String>,
    {
        let mut idx = Self::new(label, dim)?;
        for (id, v) in items {
            idx.push(id, &v)?;
        }
        Ok(idx)
    }

    /// Rebuilds from raw parts, e.g. after reading a file.
    pub fn from_parts(label: impl Into<String>, dim: usize, ids: Vec<String>, data: Vec<u64>) -> Result<Self> {
        let mut idx = Self::new(label, dim)?;
        if data.len() != ids.len() * idx.words_per_row {
            return Err(Error::LengthMismatch {
                expected: ids.len() * idx.words_per_row,
                found: data.len(),
            });
        }
        for (row, id) in ids.iter().enumerate() {
            if idx.rows_by_id.insert(id.clone(), row).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        idx.ids = ids;
        idx.data = data;
        Ok(idx)
    }

    pub fn push(&mut self, id: impl Into<String>, v: &BitHypervector) -> Result<()> {
        let id = id.into();
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim(),
            });
        }
        if self.rows_by_id.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.rows_by_id.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(v.words());
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.rows_by_id.get(id).copied()
    }

    /// All rows, row-major.
    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.data[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    pub fn vector(&self, row: usize) -> BitHypervector {
        BitHypervector::from_words(self.dim, self.row_words(row).to_vec())
            .expect("rows have the index width")
    }

    fn hit(&self, row: usize, bits: u32) -> SearchHit<'_> {
        SearchHit {
            id: &self.ids[row],
            row,
            bits,
            distance: bits as f64 / self.dim as f64,
        }
    }

    /// The `k` nearest rows in ascending distance, ties in insertion order.
    ///
    /// Full scan with a bounded max-heap; a row is abandoned as soon as its
    /// partial popcount can no longer beat the current k-th best.
    pub fn search(&self, q: &BitHypervector, k: usize) -> Result<Vec<SearchHit<'_>>> {
        if q.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: q.dim(),
            });
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let qw = q.words();
        let n = self.len();
        if k >= n {
            let mut all: Vec<(u32, usize)> = (0..n)
                .map(|row| (xor_popcount(qw, self.row_words(row)), row))
                .collect();
            all.sort_unstable();
            return Ok(all.into_iter().map(|(b, r)| self.hit(r, b)).collect());
        }

        let mut heap: BinaryHeap<(u32, usize)> = BinaryHeap::with_capacity(k + 1);
        for row in 0..n {
            let words = self.row_words(row);
            if heap.len() < k {
                heap.push((xor_popcount(qw, words), row));
                continue;
            }
            // later rows lose ties, so anything >= the bound is out
            let bound = heap.peek().map(|&(b, _)| b).unwrap_or(u32::MAX);
            let mut partial = 0u32;
            let mut pruned = false;
            for (qb, rb) in qw.chunks(BLOCK_WORDS).zip(words.chunks(BLOCK_WORDS)) {
                partial += xor_popcount(qb, rb);
                if partial >= bound {
                    pruned = true;
                    break;
                }
            }
            if !pruned {
                heap.pop();
                heap.push((partial, row));
            }
        }
        let mut best = heap.into_vec();
        best.sort_unstable();
        Ok(best.into_iter().map(|(b, r)| self.hit(r, b)).collect())
    }
}

#[inline]
fn xor_popcount(a: &[u64], b: &[u64]) -> u32 {
    crate::bsc::hamming_bits_words(a, b)
}

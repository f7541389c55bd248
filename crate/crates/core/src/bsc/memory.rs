use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{BitHypervector, Rng};
use crate::{Error, Result};

/// Cleanup dictionary: named clean hypervectors, in insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItemMemory {
    dim: usize,
    entries: Vec<(String, BitHypervector)>,
    by_name: BTreeMap<String, usize>,
}

impl ItemMemory {
    pub fn new(dim: usize) -> Result<Self> {
        super::check_dim(dim)?;
        Ok(Self {
            dim,
            entries: Vec::new(),
            by_name: BTreeMap::new(),
        })
    }

    /// One random basis vector per name, drawn in the given order.
    pub fn random<I, S>(names: I, dim: usize, rng: &mut Rng) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut mem = Self::new(dim)?;
        for name in names {
            let v = BitHypervector::random(dim, rng)?;
            mem.insert(name, v)?;
        }
        Ok(mem)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, name: impl Into<String>, v: BitHypervector) -> Result<()> {
        let name = name.into();
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim(),
            });
        }
        if self.by_name.contains_key(&name) {
            return Err(Error::DuplicateId(name));
        }
        self.by_name.insert(name.clone(), self.entries.len());
        self.entries.push((name, v));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&BitHypervector> {
        self.by_name.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn lookup(&self, name: &str) -> Result<&BitHypervector> {
        self.get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BitHypervector)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), v))
    }

    /// Nearest stored entry by Hamming distance; the first inserted wins ties.
    pub fn cleanup(&self, noisy: &BitHypervector) -> Result<(&str, f64)> {
        if self.entries.is_empty() {
            return Err(Error::Empty("item memory"));
        }
        if noisy.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: noisy.dim(),
            });
        }
        let mut best = 0;
        let mut best_bits = u32::MAX;
        for (i, (_, v)) in self.entries.iter().enumerate() {
            let d = v.hamming_bits(noisy)?;
            if d < best_bits {
                best_bits = d;
                best = i;
            }
        }
        Ok((
            self.entries[best].0.as_str(),
            best_bits as f64 / self.dim as f64,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsc::{bind, bundle};

    #[test]
    fn exact_member_is_found() {
        let mut rng = Rng::from_seed(1);
        let mem = ItemMemory::random(["a", "b", "c"], 1024, &mut rng).unwrap();
        let b = mem.get("b").unwrap().clone();
        assert_eq!(mem.cleanup(&b).unwrap(), ("b", 0.0));
    }

    #[test]
    fn single_entry_always_wins() {
        let mut rng = Rng::from_seed(2);
        let mem = ItemMemory::random(["only"], 1024, &mut rng).unwrap();
        let far = mem.get("only").unwrap().complement();
        assert_eq!(mem.cleanup(&far).unwrap(), ("only", 1.0));
    }

    #[test]
    fn ties_go_to_first_inserted() {
        let mut mem = ItemMemory::new(64).unwrap();
        let v = BitHypervector::zeros(64).unwrap();
        mem.insert("first", v.clone()).unwrap();
        mem.insert("second", v.clone()).unwrap();
        assert_eq!(mem.cleanup(&v).unwrap().0, "first");
    }

    #[test]
    fn errors() {
        let mem = ItemMemory::new(64).unwrap();
        let v = BitHypervector::zeros(64).unwrap();
        assert_eq!(mem.cleanup(&v), Err(Error::Empty("item memory")));
        let mut mem = ItemMemory::new(64).unwrap();
        mem.insert("x", v.clone()).unwrap();
        assert!(matches!(mem.insert("x", v.clone()), Err(Error::DuplicateId(_))));
        let wide = BitHypervector::zeros(128).unwrap();
        assert!(matches!(mem.cleanup(&wide), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(mem.lookup("y"), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn filler_recovered_from_two_pair_compound() {
        let mut hits = 0;
        for trial in 0..100u64 {
            let mut rng = Rng::from_seed(1000 + trial);
            let x = BitHypervector::random(10240, &mut rng).unwrap();
            let y = BitHypervector::random(10240, &mut rng).unwrap();
            let mut names: Vec<String> = alloc::vec!["A".into(), "B".into()];
            names.extend((0..8).map(|i| alloc::format!("r{i}")));
            let mem = ItemMemory::random(names, 10240, &mut rng).unwrap();
            let a = mem.get("A").unwrap();
            let b = mem.get("B").unwrap();
            let xa = bind(&x, a).unwrap();
            let yb = bind(&y, b).unwrap();
            let z = bundle(&[&xa, &yb], &mut rng).unwrap();
            let a_noisy = bind(&z, &x).unwrap();
            if mem.cleanup(&a_noisy).unwrap().0 == "A" {
                hits += 1;
            }
        }
        assert!(hits >= 99, "recovered {hits}/100");
    }
}

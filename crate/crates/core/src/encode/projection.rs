use alloc::vec;
use alloc::vec::Vec;

use crate::bsc::{check_dim, BitHypervector, Rng};
use crate::{Error, Result};

/// Rows projected together in [`ProjectionMatrix::project_batch`].
const BATCH: usize = 8;

/// Random binary matrix `P` of shape `out_bits × in_dim`, rebuilt from its seed.
///
/// Output bit `b` is 1 iff `Σ_i P[b,i]·r_i − ½·Σ_i r_i ≥ 0`. The centered sum
/// equals `½·Σ_i s[b,i]·r_i` with `s = 2P − 1 ∈ {−1, +1}`, which is what is
/// stored and accumulated. Every output lane is summed in input order, so the
/// single-row and batched paths give identical bits.
#[derive(Clone)]
pub struct ProjectionMatrix {
    seed: u64,
    in_dim: usize,
    out_bits: usize,
    /// `in_dim × out_bits`, row `i` holds `s[·, i]`.
    signs: Vec<f32>,
}

impl core::fmt::Debug for ProjectionMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ProjectionMatrix")
            .field("seed", &self.seed)
            .field("in_dim", &self.in_dim)
            .field("out_bits", &self.out_bits)
            .finish()
    }
}

impl ProjectionMatrix {
    /// Column `i` of `P` is the `i`-th random hypervector drawn from `seed`.
    pub fn new(in_dim: usize, out_bits: usize, seed: u64) -> Result<Self> {
        check_dim(out_bits)?;
        if in_dim == 0 {
            return Err(Error::Empty("projection input"));
        }
        let mut rng = Rng::from_seed(seed);
        let mut signs = Vec::with_capacity(in_dim * out_bits);
        for _ in 0..in_dim {
            let col = BitHypervector::random(out_bits, &mut rng)?;
            for &w in col.words() {
                for j in 0..64 {
                    signs.push(if (w >> j) & 1 == 1 { 1.0 } else { -1.0 });
                }
            }
        }
        Ok(Self {
            seed,
            in_dim,
            out_bits,
            signs,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_bits(&self) -> usize {
        self.out_bits
    }

    /// Matrix entry `P[b, i]`.
    pub fn entry(&self, b: usize, i: usize) -> bool {
        self.signs[i * self.out_bits + b] > 0.0
    }

    fn validate(&self, r: &[f32]) -> Result<()> {
        if r.len() != self.in_dim {
            return Err(Error::LengthMismatch {
                expected: self.in_dim,
                found: r.len(),
            });
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateInput("non-finite component"));
        }
        if r.iter().all(|&x| x == 0.0) {
            return Err(Error::DegenerateInput("all-zero vector"));
        }
        Ok(())
    }

    pub fn project(&self, r: &[f32]) -> Result<BitHypervector> {
        Ok(self.project_batch(&[r])?.remove(0))
    }

    /// Projects several rows while streaming the matrix once per block.
    pub fn project_batch(&self, rows: &[&[f32]]) -> Result<Vec<BitHypervector>> {
        for r in rows {
            self.validate(r)?;
        }
        let out = self.out_bits;
        let mut result = Vec::with_capacity(rows.len());
        let mut acc = vec![0f32; BATCH * out];
        for chunk in rows.chunks(BATCH) {
            acc[..chunk.len() * out].fill(0.0);
            for i in 0..self.in_dim {
                let s = &self.signs[i * out..(i + 1) * out];
                for (k, r) in chunk.iter().enumerate() {
                    let ri = r[i];
                    for (a, &sv) in acc[k * out..(k + 1) * out].iter_mut().zip(s) {
                        *a += sv * ri;
                    }
                }
            }
            for k in 0..chunk.len() {
                let lane = &acc[k * out..(k + 1) * out];
                let words = lane
                    .chunks_exact(64)
                    .map(|c| {
                        c.iter()
                            .enumerate()
                            .fold(0u64, |w, (j, &x)| w | (((x >= 0.0) as u64) << j))
                    })
                    .collect();
                result.push(BitHypervector::from_words(out, words)?);
            }
        }
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussianish(rng: &mut Rng, n: usize) -> Vec<f32> {
        // sum of uniforms, good enough for sign tests
        (0..n)
            .map(|_| (0..4).map(|_| rng.unit_f64()).sum::<f64>() as f32 - 2.0)
            .collect()
    }

    #[test]
    fn matches_direct_definition() {
        let p = ProjectionMatrix::new(5, 128, 9).unwrap();
        let r = [0.3f32, -1.2, 0.7, 2.0, -0.4];
        let z = p.project(&r).unwrap();
        let mu: f64 = 0.5 * r.iter().map(|&x| x as f64).sum::<f64>();
        for b in 0..128 {
            let a: f64 = (0..5)
                .filter(|&i| p.entry(b, i))
                .map(|i| r[i] as f64)
                .sum();
            assert_eq!(z.bit(b), a - mu >= 0.0, "bit {b}");
        }
    }

    #[test]
    fn positive_scaling_is_invariant() {
        let mut rng = Rng::from_seed(2);
        let p = ProjectionMatrix::new(64, 1024, 1).unwrap();
        let r = gaussianish(&mut rng, 64);
        let scaled: Vec<f32> = r.iter().map(|x| x * 4.0).collect();
        assert_eq!(p.project(&r).unwrap(), p.project(&scaled).unwrap());
    }

    #[test]
    fn negation_complements() {
        let mut rng = Rng::from_seed(3);
        let p = ProjectionMatrix::new(64, 1024, 1).unwrap();
        let r = gaussianish(&mut rng, 64);
        let neg: Vec<f32> = r.iter().map(|x| -x).collect();
        assert_eq!(p.project(&neg).unwrap(), p.project(&r).unwrap().complement());
    }

    #[test]
    fn batch_equals_single() {
        let mut rng = Rng::from_seed(4);
        let p = ProjectionMatrix::new(32, 256, 5).unwrap();
        let rows: Vec<Vec<f32>> = (0..19).map(|_| gaussianish(&mut rng, 32)).collect();
        let refs: Vec<&[f32]> = rows.iter().map(|r| r.as_slice()).collect();
        let batch = p.project_batch(&refs).unwrap();
        for (r, b) in rows.iter().zip(&batch) {
            assert_eq!(&p.project(r).unwrap(), b);
        }
    }

    #[test]
    fn input_errors() {
        let p = ProjectionMatrix::new(3, 64, 1).unwrap();
        assert!(matches!(
            p.project(&[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            p.project(&[0.0, 0.0, 0.0]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            p.project(&[f32::NAN, 0.0, 1.0]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(ProjectionMatrix::new(3, 100, 1).is_err());
    }

    #[test]
    fn same_seed_same_matrix() {
        let a = ProjectionMatrix::new(7, 128, 77).unwrap();
        let b = ProjectionMatrix::new(7, 128, 77).unwrap();
        assert_eq!(a.signs, b.signs);
        let c = ProjectionMatrix::new(7, 128, 78).unwrap();
        assert_ne!(a.signs, c.signs);
    }
}

//! Binary spatter-code algebra.
//!
//! Binding is XOR, bundling is a per-bit majority vote and similarity is the
//! normalized Hamming distance. Random hypervectors come from a seeded
//! [`Rng`] so every vector in the system can be rebuilt from its seed.

mod bundle;
mod hypervector;
mod memory;
mod rng;

pub use bundle::{bundle, bundle_weighted, Accumulator};
pub use hypervector::{bind, check_dim, hamming, hamming_bits_words, BitHypervector, WORD_BITS};
pub use memory::ItemMemory;
pub use rng::{derive_seed, fnv1a, Rng};

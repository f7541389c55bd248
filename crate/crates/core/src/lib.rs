//! Hyperdimensional encoding and matching for semi-structured records.
//!
//! Records (a post's text, hashtags, language, location, sentiment and
//! timestamp) are mapped into fixed-width binary hypervectors using binary
//! spatter-code operators: XOR binding, majority bundling, random projection
//! of real-valued embeddings, character basis vectors and level sequences.
//! Queries are answered by exact Hamming-distance search with a per-attribute
//! threshold ("fuzziness") and an intersection across attributes.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the HTTP
//! service and the command line live in the `hvd` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bsc;
pub mod encode;
mod error;
pub mod index;
pub mod record;

pub use bsc::{bind, bundle, bundle_weighted, hamming, BitHypervector, ItemMemory, Rng};
pub use encode::{
    AlphabetMemory, ComponentMemories, EncoderSet, EncoderSettings, LevelSequence,
    ProjectionMatrix, Seeds, TimeComponent, TimeConfig, TimeEncoding, Timestamp,
};
pub use error::{Error, Result};
pub use index::{
    distance_matrix, match_queries, DistanceMatrix, Fuzziness, HammingIndex, IndexSet,
    MatchOutcome, SearchHit,
};
pub use record::{
    make_query_vectors_sv, Attribute, AttributeVectors, CompoundVector, Record, RoleRegistry,
};

//! Exact Hamming search and fuzziness matching.

mod hamming_index;
mod matching;

pub use hamming_index::{HammingIndex, SearchHit};
pub use matching::{
    distance_matrix, match_queries, passes, AttributeSource, DistanceMatrix, Fuzziness, IndexSet,
    MatchOutcome,
};

//! Attribute encoders: real vectors, strings, probabilities and timestamps
//! into hypervectors.

mod level;
mod lexical;
mod projection;
mod set;
mod time;

pub use level::{level_lookup, LevelSequence};
pub use lexical::{encode_lexical, normalize_lexical, AlphabetMemory, DEFAULT_ALPHABET};
pub use projection::ProjectionMatrix;
pub use set::{
    encode_hashtags, encode_semantic_text, encode_sentiment, EncoderSet, EncoderSettings, Seeds,
    SentimentClass,
};
pub use time::{
    encode_timestamp_components, encode_timestamp_level, window_of, Civil, ComponentMemories,
    TimeComponent, TimeConfig, TimeEncoding, Timestamp,
};

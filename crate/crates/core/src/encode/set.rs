use alloc::string::String;
use alloc::vec::Vec;

use super::{
    encode_lexical, encode_timestamp_components, encode_timestamp_level, AlphabetMemory,
    ComponentMemories, LevelSequence, ProjectionMatrix, TimeConfig, TimeEncoding, Timestamp,
};
use crate::bsc::{bundle, derive_seed, BitHypervector, Rng};
use crate::record::{Attribute, RoleRegistry};
use crate::{Error, Result};

pub fn encode_semantic_text(embedding: &[f32], p: &ProjectionMatrix) -> Result<BitHypervector> {
    p.project(embedding)
}

/// Projects each hashtag embedding and bundles the results.
pub fn encode_hashtags(embeddings: &[&[f32]], p: &ProjectionMatrix, rng: &mut Rng) -> Result<BitHypervector> {
    if embeddings.is_empty() {
        return Err(Error::Empty("hashtag list"));
    }
    let projected = p.project_batch(embeddings)?;
    let refs: Vec<&BitHypervector> = projected.iter().collect();
    bundle(&refs, rng)
}

/// Projects a probability vector (any length matching the matrix input).
pub fn encode_sentiment(probs: &[f64], p: &ProjectionMatrix) -> Result<BitHypervector> {
    validate_probs(probs, p.in_dim())?;
    let r: Vec<f32> = probs.iter().map(|&x| x as f32).collect();
    p.project(&r)
}

pub(crate) fn validate_probs(probs: &[f64], len: usize) -> Result<()> {
    if probs.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            found: probs.len(),
        });
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::DegenerateInput("negative or non-finite probability"));
    }
    let sum: f64 = probs.iter().sum();
    if !(sum > 1.0 - 1e-6 && sum < 1.0 + 1e-6) {
        return Err(Error::DegenerateInput("probabilities do not sum to 1"));
    }
    Ok(())
}

/// Argmax class of a negative/neutral/positive probability triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SentimentClass {
    Negative,
    Neutral,
    Positive,
}

impl SentimentClass {
    pub const ALL: [SentimentClass; 3] = [
        SentimentClass::Negative,
        SentimentClass::Neutral,
        SentimentClass::Positive,
    ];

    /// First maximum wins.
    pub fn argmax(probs: &[f64; 3]) -> Self {
        let mut best = 0;
        for i in 1..3 {
            if probs[i] > probs[best] {
                best = i;
            }
        }
        Self::ALL[best]
    }

    pub fn one_hot(self) -> [f64; 3] {
        let mut p = [0.0; 3];
        p[self as usize] = 1.0;
        p
    }

    pub fn name(self) -> &'static str {
        match self {
            SentimentClass::Negative => "negative",
            SentimentClass::Neutral => "neutral",
            SentimentClass::Positive => "positive",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Seeds for every random structure in an encoder set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seeds {
    pub text: u64,
    pub hashtags: u64,
    pub sentiment: u64,
    pub alphabet: u64,
    pub time: u64,
    pub roles: u64,
    pub ties: u64,
}

impl Seeds {
    /// Distinct per-purpose seeds derived from one master seed.
    pub fn from_master(seed: u64) -> Self {
        Self {
            text: derive_seed(seed, b"text"),
            hashtags: derive_seed(seed, b"hashtags"),
            sentiment: derive_seed(seed, b"sentiment"),
            alphabet: derive_seed(seed, b"alphabet"),
            time: derive_seed(seed, b"time"),
            roles: derive_seed(seed, b"roles"),
            ties: derive_seed(seed, b"ties"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncoderSettings {
    pub dim: usize,
    pub embedding_dim: usize,
    pub seeds: Seeds,
    pub time: TimeConfig,
    pub alphabet: String,
    /// Length of each role level sequence (odd, role = middle element).
    pub role_levels: usize,
}

impl EncoderSettings {
    /// Attributes a record can carry under these settings, in bundle order.
    pub fn attributes(&self) -> Vec<Attribute> {
        let mut attrs = alloc::vec![
            Attribute::Text,
            Attribute::Hashtags,
            Attribute::Language,
            Attribute::Location,
            Attribute::Sentiment,
        ];
        match self.time.encoding {
            TimeEncoding::Level => attrs.push(Attribute::CreatedAt),
            TimeEncoding::Components => {
                attrs.extend(self.time.components.iter().map(|&c| Attribute::Component(c)))
            }
        }
        attrs
    }
}

/// Every matrix, memory and sequence needed to encode records, built from
/// [`EncoderSettings`] alone.
#[derive(Clone, Debug)]
pub struct EncoderSet {
    settings: EncoderSettings,
    text: ProjectionMatrix,
    hashtags: ProjectionMatrix,
    sentiment: ProjectionMatrix,
    alphabet: AlphabetMemory,
    levels: Option<LevelSequence>,
    components: Option<ComponentMemories>,
    roles: RoleRegistry,
}

impl EncoderSet {
    pub fn new(settings: EncoderSettings) -> Result<Self> {
        settings.time.validate()?;
        let dim = settings.dim;
        let s = settings.seeds;
        let text = ProjectionMatrix::new(settings.embedding_dim, dim, s.text)?;
        let hashtags = ProjectionMatrix::new(settings.embedding_dim, dim, s.hashtags)?;
        let sentiment = ProjectionMatrix::new(3, dim, s.sentiment)?;
        let alphabet = AlphabetMemory::new(&settings.alphabet, dim, &mut Rng::from_seed(s.alphabet))?;
        let mut time_rng = Rng::from_seed(s.time);
        let (levels, components) = match settings.time.encoding {
            TimeEncoding::Level => (
                Some(LevelSequence::new(settings.time.levels, dim, &mut time_rng)?),
                None,
            ),
            TimeEncoding::Components => (
                None,
                Some(ComponentMemories::new(&settings.time.components, dim, &mut time_rng)?),
            ),
        };
        let roles = RoleRegistry::new(&settings.attributes(), dim, s.roles, settings.role_levels)?;
        Ok(Self {
            settings,
            text,
            hashtags,
            sentiment,
            alphabet,
            levels,
            components,
            roles,
        })
    }

    pub fn settings(&self) -> &EncoderSettings {
        &self.settings
    }

    pub fn dim(&self) -> usize {
        self.settings.dim
    }

    pub fn roles(&self) -> &RoleRegistry {
        &self.roles
    }

    pub fn text_matrix(&self) -> &ProjectionMatrix {
        &self.text
    }

    pub fn hashtag_matrix(&self) -> &ProjectionMatrix {
        &self.hashtags
    }

    pub fn sentiment_matrix(&self) -> &ProjectionMatrix {
        &self.sentiment
    }

    pub fn alphabet(&self) -> &AlphabetMemory {
        &self.alphabet
    }

    pub fn level_sequence(&self) -> Option<&LevelSequence> {
        self.levels.as_ref()
    }

    pub fn component_memories(&self) -> Option<&ComponentMemories> {
        self.components.as_ref()
    }

    /// Tie-break stream for bundles whose content is identified by `key`.
    pub fn tie_rng(&self, purpose: &[u8], key: &[u8]) -> Rng {
        let s = derive_seed(self.settings.seeds.ties, purpose);
        Rng::from_seed(derive_seed(s, key))
    }

    pub fn text(&self, embedding: &[f32]) -> Result<BitHypervector> {
        encode_semantic_text(embedding, &self.text)
    }

    /// Hashtag compound. The tie-break stream is keyed by the tag strings so
    /// equal tag lists give equal vectors.
    pub fn hashtags(&self, tags: &[String], embeddings: &[&[f32]]) -> Result<BitHypervector> {
        if tags.len() != embeddings.len() {
            return Err(Error::LengthMismatch {
                expected: tags.len(),
                found: embeddings.len(),
            });
        }
        let projected = self.hashtags.project_batch(embeddings)?;
        self.bundle_hashtags(tags, &projected)
    }

    pub fn bundle_hashtags(&self, tags: &[String], projected: &[BitHypervector]) -> Result<BitHypervector> {
        if projected.is_empty() {
            return Err(Error::Empty("hashtag list"));
        }
        let mut key = String::new();
        for t in tags {
            key.push_str(t);
            key.push('\u{1f}');
        }
        let refs: Vec<&BitHypervector> = projected.iter().collect();
        bundle(&refs, &mut self.tie_rng(b"hashtags", key.as_bytes()))
    }

    pub fn sentiment(&self, probs: &[f64]) -> Result<BitHypervector> {
        encode_sentiment(probs, &self.sentiment)
    }

    /// Lexical vector with a tie-break stream keyed by the normalized text,
    /// so a given string always encodes the same way.
    pub fn lexical(&self, text: &str) -> Result<BitHypervector> {
        let norm = super::normalize_lexical(text);
        let mut rng = self.tie_rng(b"lexical", norm.as_bytes());
        encode_lexical(&norm, &self.alphabet, &mut rng)
    }

    /// Timestamp vectors: one `CreatedAt` entry in level mode, one entry per
    /// component otherwise. The flag is set when the timestamp was clamped.
    pub fn timestamp(&self, ts: Timestamp) -> Result<(Vec<(Attribute, BitHypervector)>, bool)> {
        let cfg = &self.settings.time;
        match (&self.levels, &self.components) {
            (Some(seq), _) => {
                let (v, clamped) = encode_timestamp_level(ts, cfg, seq)?;
                Ok((alloc::vec![(Attribute::CreatedAt, v.clone())], clamped))
            }
            (None, Some(mems)) => {
                let parts = encode_timestamp_components(ts, mems)?;
                Ok((
                    parts
                        .into_iter()
                        .map(|(c, v)| (Attribute::Component(c), v.clone()))
                        .collect(),
                    false,
                ))
            }
            (None, None) => Err(Error::InvalidParameter("no time encoder".into())),
        }
    }

    /// Level vector for window `w` (level mode only).
    pub fn level_window(&self, w: usize) -> Result<&BitHypervector> {
        let seq = self
            .levels
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("time encoding is not level mode".into()))?;
        if w >= seq.len() {
            return Err(Error::ValueOutOfRange { what: "time window", value: w as i64 });
        }
        Ok(seq.level(w))
    }
}

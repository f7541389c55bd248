//! Minimal record model and its two hypervector forms.
//!
//! Multiple-vector (MV) keeps one hypervector per populated attribute.
//! Single-vector (SV) binds each attribute filler to its role vector and
//! bundles the pairs into one compound, so `t` records cost `t × dim` bits
//! instead of `a × t × dim`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::bsc::{bind, derive_seed, fnv1a, Accumulator, BitHypervector, Rng};
use crate::encode::{EncoderSet, LevelSequence, TimeComponent, Timestamp};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Attribute {
    Text,
    Hashtags,
    Language,
    Location,
    Sentiment,
    CreatedAt,
    /// One calendar component in component timestamp mode.
    Component(TimeComponent),
}

impl Attribute {
    pub fn name(self) -> &'static str {
        match self {
            Attribute::Text => "text",
            Attribute::Hashtags => "hashtags",
            Attribute::Language => "language",
            Attribute::Location => "location",
            Attribute::Sentiment => "sentiment",
            Attribute::CreatedAt => "created_at",
            Attribute::Component(c) => c.name(),
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "text" => Attribute::Text,
            "hashtags" => Attribute::Hashtags,
            "language" => Attribute::Language,
            "location" => Attribute::Location,
            "sentiment" => Attribute::Sentiment,
            "created_at" => Attribute::CreatedAt,
            other => Attribute::Component(
                TimeComponent::from_name(other).ok_or_else(|| Error::UnknownAttribute(other.into()))?,
            ),
        })
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A post and its metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub id: String,
    pub text: String,
    pub hashtags: Vec<String>,
    /// Empty when unknown.
    pub language: String,
    pub location: Option<String>,
    /// Negative, neutral, positive.
    pub sentiment: Option<[f64; 3]>,
    pub created_at: Timestamp,
    pub text_embedding: Option<Vec<f32>>,
    /// Aligned with `hashtags`.
    pub hashtag_embeddings: Option<Vec<Vec<f32>>>,
}

impl Record {
    pub fn new(id: impl Into<String>, text: impl Into<String>, created_at: Timestamp) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            hashtags: Vec::new(),
            language: String::new(),
            location: None,
            sentiment: None,
            created_at,
            text_embedding: None,
            hashtag_embeddings: None,
        }
    }
}

/// MV form: populated attributes only, absent ones have no key.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AttributeVectors {
    vectors: BTreeMap<Attribute, BitHypervector>,
    /// Timestamp fell outside the configured range and was clamped.
    pub clamped_time: bool,
}

impl AttributeVectors {
    pub fn get(&self, attr: Attribute) -> Option<&BitHypervector> {
        self.vectors.get(&attr)
    }

    pub fn insert(&mut self, attr: Attribute, v: BitHypervector) {
        self.vectors.insert(attr, v);
    }

    pub fn contains(&self, attr: Attribute) -> bool {
        self.vectors.contains_key(&attr)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Attribute, &BitHypervector)> {
        self.vectors.iter().map(|(a, v)| (*a, v))
    }

    pub fn attributes(&self) -> impl Iterator<Item = Attribute> + '_ {
        self.vectors.keys().copied()
    }
}

/// SV form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompoundVector {
    pub vector: BitHypervector,
    /// [`RoleRegistry::version_hash`] of the registry that produced it.
    pub registry: u64,
}

/// Per-attribute role vectors, each the middle element of its own level
/// sequence. The sequences span the full width so the middle element lies at
/// distance 0.5 from the sequence start.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleRegistry {
    seed: u64,
    dim: usize,
    levels: usize,
    roles: BTreeMap<Attribute, BitHypervector>,
    order: Vec<Attribute>,
    starts: BTreeMap<Attribute, BitHypervector>,
}

impl RoleRegistry {
    pub fn new(attributes: &[Attribute], dim: usize, seed: u64, levels: usize) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Empty("role attribute list"));
        }
        if levels < 3 || levels.is_multiple_of(2) {
            return Err(Error::InvalidParameter(alloc::format!(
                "role level count {levels} must be odd and at least 3"
            )));
        }
        let mut roles = BTreeMap::new();
        let mut starts = BTreeMap::new();
        let mut order = Vec::new();
        for &attr in attributes {
            if roles.contains_key(&attr) {
                return Err(Error::DuplicateId(attr.name().into()));
            }
            let mut rng = Rng::from_seed(derive_seed(seed, attr.name().as_bytes()));
            let seq = LevelSequence::with_span(levels, dim, dim, &mut rng)?;
            roles.insert(attr, seq.middle().clone());
            starts.insert(attr, seq.level(0).clone());
            order.push(attr);
        }
        Ok(Self {
            seed,
            dim,
            levels,
            roles,
            order,
            starts,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.order
    }

    pub fn role(&self, attr: Attribute) -> Result<&BitHypervector> {
        self.roles
            .get(&attr)
            .ok_or_else(|| Error::UnknownAttribute(attr.name().into()))
    }

    /// First element of the attribute's role sequence.
    pub fn sequence_start(&self, attr: Attribute) -> Result<&BitHypervector> {
        self.starts
            .get(&attr)
            .ok_or_else(|| Error::UnknownAttribute(attr.name().into()))
    }

    /// Identifies the role convention: seed, width, sequence length and
    /// attribute list.
    pub fn version_hash(&self) -> u64 {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&self.seed.to_le_bytes());
        bytes.extend_from_slice(&(self.dim as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.levels as u64).to_le_bytes());
        for a in &self.order {
            bytes.extend_from_slice(a.name().as_bytes());
            bytes.push(0);
        }
        fnv1a(&bytes)
    }
}

/// Encodes every populated attribute of `rec`.
pub fn encode_record_mv(rec: &Record, enc: &EncoderSet) -> Result<AttributeVectors> {
    let text = match &rec.text_embedding {
        Some(e) => enc.text(e)?,
        None => return Err(Error::MissingField("text_embedding")),
    };
    let hashtags = if rec.hashtags.is_empty() {
        None
    } else {
        let embs = rec
            .hashtag_embeddings
            .as_ref()
            .ok_or(Error::MissingField("hashtag_embeddings"))?;
        let refs: Vec<&[f32]> = embs.iter().map(|e| e.as_slice()).collect();
        Some(enc.hashtags(&rec.hashtags, &refs)?)
    };
    assemble_mv(rec, enc, Some(text), hashtags)
}

/// Finishes the MV encoding from already projected text and hashtag vectors.
/// A record without a text vector (e.g. one that could not be enriched) is
/// encoded on its remaining attributes.
pub fn assemble_mv(
    rec: &Record,
    enc: &EncoderSet,
    text: Option<BitHypervector>,
    hashtags: Option<BitHypervector>,
) -> Result<AttributeVectors> {
    let mut out = AttributeVectors::default();
    if let Some(t) = text {
        out.insert(Attribute::Text, t);
    }
    if let Some(h) = hashtags {
        out.insert(Attribute::Hashtags, h);
    }
    if !rec.language.trim().is_empty() {
        out.insert(Attribute::Language, enc.lexical(&rec.language)?);
    }
    if let Some(loc) = rec.location.as_deref().filter(|l| !l.trim().is_empty()) {
        out.insert(Attribute::Location, enc.lexical(loc)?);
    }
    if let Some(s) = &rec.sentiment {
        out.insert(Attribute::Sentiment, enc.sentiment(s)?);
    }
    let (time, clamped) = enc.timestamp(rec.created_at)?;
    for (a, v) in time {
        out.insert(a, v);
    }
    out.clamped_time = clamped;
    Ok(out)
}

/// Bundle of `bind(role, filler)` over the populated attributes.
pub fn compound(vectors: &AttributeVectors, roles: &RoleRegistry, rng: &mut Rng) -> Result<CompoundVector> {
    let mut acc = Accumulator::new(roles.dim)?;
    for (attr, filler) in vectors.iter() {
        acc.add(&bind(roles.role(attr)?, filler)?, 1)?;
    }
    Ok(CompoundVector {
        vector: acc.finish(rng)?,
        registry: roles.version_hash(),
    })
}

pub fn encode_record_sv(rec: &Record, enc: &EncoderSet, rng: &mut Rng) -> Result<CompoundVector> {
    let mv = encode_record_mv(rec, enc)?;
    compound(&mv, enc.roles(), rng)
}

/// Tie-break stream for a record's compound, keyed by its id.
pub fn record_rng(enc: &EncoderSet, id: &str) -> Rng {
    enc.tie_rng(b"record", id.as_bytes())
}

/// One query vector per queried attribute: `bind(role, filler)`. Attributes
/// that are not queried are left out entirely (weight zero).
pub fn make_query_vectors_sv(
    query: &[(Attribute, BitHypervector)],
    roles: &RoleRegistry,
) -> Result<Vec<(Attribute, BitHypervector)>> {
    if query.is_empty() {
        return Err(Error::Empty("query attribute list"));
    }
    query
        .iter()
        .map(|(a, filler)| Ok((*a, bind(roles.role(*a)?, filler)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsc::hamming;
    use crate::encode::{EncoderSettings, Seeds, TimeConfig, TimeEncoding, DEFAULT_ALPHABET};
    use alloc::vec;

    fn enc(dim: usize) -> EncoderSet {
        EncoderSet::new(EncoderSettings {
            dim,
            embedding_dim: 16,
            seeds: Seeds::from_master(9),
            time: TimeConfig {
                start: Timestamp::from_civil(2020, 1, 1, 0, 0, 0).unwrap(),
                end: Timestamp::from_civil(2024, 1, 1, 0, 0, 0).unwrap(),
                levels: 32,
                encoding: TimeEncoding::Level,
                components: vec![],
            },
            alphabet: DEFAULT_ALPHABET.into(),
            role_levels: 3,
        })
        .unwrap()
    }

    fn emb(seed: u64) -> Vec<f32> {
        let mut rng = Rng::from_seed(seed);
        (0..16).map(|_| rng.unit_f64() as f32 - 0.5).collect()
    }

    fn record(id: &str) -> Record {
        let mut r = Record::new(id, "some text", Timestamp::from_civil(2022, 5, 1, 0, 0, 0).unwrap());
        r.language = "en-uk".into();
        r.location = Some("london".into());
        r.sentiment = Some([0.1, 0.2, 0.7]);
        r.text_embedding = Some(emb(1));
        r.hashtags = vec!["a".into(), "b".into()];
        r.hashtag_embeddings = Some(vec![emb(2), emb(3)]);
        r
    }

    #[test]
    fn attribute_names_round_trip() {
        for a in [
            Attribute::Text,
            Attribute::CreatedAt,
            Attribute::Component(TimeComponent::Hour),
        ] {
            assert_eq!(Attribute::from_name(a.name()).unwrap(), a);
        }
        assert!(Attribute::from_name("colour").is_err());
    }

    #[test]
    fn absent_attributes_have_no_key() {
        let e = enc(1024);
        let mut r = record("x");
        r.hashtags.clear();
        r.hashtag_embeddings = None;
        r.location = None;
        let mv = encode_record_mv(&r, &e).unwrap();
        assert!(!mv.contains(Attribute::Hashtags));
        assert!(!mv.contains(Attribute::Location));
        assert_eq!(mv.len(), 4);
    }

    #[test]
    fn missing_embedding_is_an_error() {
        let e = enc(1024);
        let mut r = record("x");
        r.text_embedding = None;
        assert_eq!(encode_record_mv(&r, &e), Err(Error::MissingField("text_embedding")));
        let mut r = record("x");
        r.hashtag_embeddings = None;
        assert_eq!(encode_record_mv(&r, &e), Err(Error::MissingField("hashtag_embeddings")));
        let mut r = record("x");
        r.language = "日本".into();
        assert!(matches!(encode_record_mv(&r, &e), Err(Error::UnknownSymbol(_))));
    }

    #[test]
    fn deterministic_and_attribute_independent() {
        let e = enc(1024);
        let a = encode_record_mv(&record("x"), &e).unwrap();
        assert_eq!(a, encode_record_mv(&record("x"), &e).unwrap());
        let mut later = record("x");
        later.created_at = Timestamp::from_civil(2023, 6, 1, 0, 0, 0).unwrap();
        let b = encode_record_mv(&later, &e).unwrap();
        for (attr, v) in a.iter() {
            if attr == Attribute::CreatedAt {
                assert_ne!(b.get(attr).unwrap(), v);
            } else {
                assert_eq!(b.get(attr).unwrap(), v);
            }
        }
    }

    #[test]
    fn single_attribute_compound_is_the_bound_pair() {
        let e = enc(1024);
        let mut mv = AttributeVectors::default();
        let filler = e.lexical("fr-fr").unwrap();
        mv.insert(Attribute::Language, filler.clone());
        let c = compound(&mv, e.roles(), &mut Rng::from_seed(0)).unwrap();
        assert_eq!(c.vector, bind(e.roles().role(Attribute::Language).unwrap(), &filler).unwrap());
        assert_eq!(c.registry, e.roles().version_hash());
    }

    #[test]
    fn roles_are_middle_elements_and_orthogonal() {
        let e = enc(10240);
        let roles = e.roles();
        let attrs = roles.attributes();
        assert_eq!(attrs.len(), 6);
        for &a in attrs {
            let d = hamming(roles.sequence_start(a).unwrap(), roles.role(a).unwrap()).unwrap();
            assert_eq!(d, 0.5);
        }
        for (i, &a) in attrs.iter().enumerate() {
            for &b in &attrs[i + 1..] {
                let d = hamming(roles.role(a).unwrap(), roles.role(b).unwrap()).unwrap();
                assert!(d >= 0.47, "{a}/{b}: {d}");
            }
        }
    }

    #[test]
    fn query_vectors_one_per_attribute() {
        let e = enc(1024);
        let q = vec![
            (Attribute::Language, e.lexical("en-uk").unwrap()),
            (Attribute::Location, e.lexical("paris").unwrap()),
            (Attribute::Sentiment, e.sentiment(&[1.0, 0.0, 0.0]).unwrap()),
        ];
        let out = make_query_vectors_sv(&q, e.roles()).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].1, bind(e.roles().role(Attribute::Language).unwrap(), &q[0].1).unwrap());
        assert!(make_query_vectors_sv(&[], e.roles()).is_err());
        let other = RoleRegistry::new(&[Attribute::Text], 1024, 1, 3).unwrap();
        assert!(matches!(
            make_query_vectors_sv(&q, &other),
            Err(Error::UnknownAttribute(_))
        ));
    }

    #[test]
    fn registry_validation() {
        assert!(RoleRegistry::new(&[], 1024, 1, 3).is_err());
        assert!(RoleRegistry::new(&[Attribute::Text], 1024, 1, 4).is_err());
        assert!(RoleRegistry::new(&[Attribute::Text, Attribute::Text], 1024, 1, 3).is_err());
        let a = RoleRegistry::new(&[Attribute::Text], 1024, 1, 3).unwrap();
        let b = RoleRegistry::new(&[Attribute::Text], 1024, 2, 3).unwrap();
        assert_ne!(a.version_hash(), b.version_hash());
    }
}

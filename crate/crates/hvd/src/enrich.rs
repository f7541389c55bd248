//! ML-derived attributes from an external service.
//!
//! Models run out of process. The engine only sees three operations: a text
//! embedding, a 3-class sentiment distribution and an optional location.

use std::time::Duration;

use hvd_core::Record;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnrichError {
    /// Service unreachable, timed out or returned an error status.
    Unavailable(String),
    /// Service answered with the wrong shape.
    Shape(String),
}

impl std::fmt::Display for EnrichError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EnrichError::Unavailable(m) => write!(f, "enrichment unavailable: {m}"),
            EnrichError::Shape(m) => write!(f, "invalid enrichment output: {m}"),
        }
    }
}

impl std::error::Error for EnrichError {}

pub trait EnrichmentClient: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f32>, EnrichError>;
    fn sentiment(&self, text: &str) -> Result<[f64; 3], EnrichError>;
    fn locate(&self, text: &str) -> Result<Option<String>, EnrichError>;
}

/// Client for `POST /embed`, `/sentiment` and `/ner-location`.
pub struct HttpEnrichment {
    base: String,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct TextBody<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedReply {
    vector: Vec<f32>,
}

#[derive(Deserialize)]
struct SentimentReply {
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct LocationReply {
    location: Option<String>,
}

impl HttpEnrichment {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            base: base_url.trim_end_matches('/').to_string(),
            agent,
        }
    }

    fn call<T: serde::de::DeserializeOwned>(&self, path: &str, text: &str) -> Result<T, EnrichError> {
        let url = format!("{}{}", self.base, path);
        let mut resp = self
            .agent
            .post(&url)
            .send_json(TextBody { text })
            .map_err(|e| EnrichError::Unavailable(format!("{url}: {e}")))?;
        resp.body_mut()
            .read_json::<T>()
            .map_err(|e| EnrichError::Shape(format!("{url}: {e}")))
    }
}

impl EnrichmentClient for HttpEnrichment {
    fn embed(&self, text: &str) -> Result<Vec<f32>, EnrichError> {
        let r: EmbedReply = self.call("/embed", text)?;
        if r.vector.is_empty() || r.vector.iter().any(|x| !x.is_finite()) {
            return Err(EnrichError::Shape("embedding is empty or non-finite".into()));
        }
        Ok(r.vector)
    }

    fn sentiment(&self, text: &str) -> Result<[f64; 3], EnrichError> {
        let r: SentimentReply = self.call("/sentiment", text)?;
        check_probs(&r.probs)
    }

    fn locate(&self, text: &str) -> Result<Option<String>, EnrichError> {
        let r: LocationReply = self.call("/ner-location", text)?;
        Ok(r.location.filter(|l| !l.trim().is_empty()))
    }
}

pub fn check_probs(p: &[f64]) -> Result<[f64; 3], EnrichError> {
    let arr: [f64; 3] = p
        .try_into()
        .map_err(|_| EnrichError::Shape(format!("sentiment has {} entries, expected 3", p.len())))?;
    let sum: f64 = arr.iter().sum();
    if arr.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > 1e-6 {
        return Err(EnrichError::Shape(format!("sentiment {arr:?} is not a distribution")));
    }
    Ok(arr)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Enriched {
    pub record: Record,
    /// Some field could not be filled because the service was unavailable.
    pub unenriched: bool,
}

/// Fills missing sentiment, location, text and hashtag embeddings. Supplied
/// values are never replaced. An unreachable service leaves the record as it
/// is, flagged; a malformed answer is an error.
pub fn enrich(mut rec: Record, client: &dyn EnrichmentClient) -> Result<Enriched, EnrichError> {
    if rec.text.trim().is_empty() {
        return Err(EnrichError::Shape(format!("record {:?} has empty text", rec.id)));
    }
    let mut unenriched = false;
    let mut note = |r: Result<(), EnrichError>| -> Result<(), EnrichError> {
        match r {
            Err(EnrichError::Unavailable(_)) => {
                unenriched = true;
                Ok(())
            }
            other => other,
        }
    };
    if rec.text_embedding.is_none() {
        note(client.embed(&rec.text).map(|v| rec.text_embedding = Some(v)))?;
    }
    if rec.sentiment.is_none() {
        note(client.sentiment(&rec.text).map(|s| rec.sentiment = Some(s)))?;
    }
    if rec.location.is_none() {
        note(client.locate(&rec.text).map(|l| rec.location = l))?;
    }
    if !rec.hashtags.is_empty() && rec.hashtag_embeddings.is_none() {
        let embs: Result<Vec<_>, _> = rec.hashtags.iter().map(|t| client.embed(t)).collect();
        note(embs.map(|e| rec.hashtag_embeddings = Some(e)))?;
    }
    Ok(Enriched {
        record: rec,
        unenriched,
    })
}

/// Enriches a batch with at most `in_flight` concurrent calls; output order
/// follows input order.
pub fn enrich_batch(
    records: Vec<Record>,
    client: &dyn EnrichmentClient,
    in_flight: usize,
) -> Vec<Result<Enriched, EnrichError>> {
    let in_flight = in_flight.max(1);
    let mut out = Vec::with_capacity(records.len());
    let mut it = records.into_iter().peekable();
    while it.peek().is_some() {
        let chunk: Vec<Record> = it.by_ref().take(in_flight).collect();
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .into_iter()
                .map(|r| s.spawn(move || enrich(r, client)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(EnrichError::Unavailable("worker panicked".into()))))
                .collect()
        });
        out.extend(results);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use hvd_core::Timestamp;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Fake {
        probs: Vec<f64>,
        location: Option<String>,
        down: bool,
        calls: AtomicUsize,
    }

    impl Fake {
        fn new() -> Self {
            Self {
                probs: vec![0.1, 0.2, 0.7],
                location: None,
                down: false,
                calls: AtomicUsize::new(0),
            }
        }
    }

    impl EnrichmentClient for Fake {
        fn embed(&self, text: &str) -> Result<Vec<f32>, EnrichError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.down {
                return Err(EnrichError::Unavailable("down".into()));
            }
            Ok(vec![text.len() as f32, 1.0])
        }
        fn sentiment(&self, _: &str) -> Result<[f64; 3], EnrichError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.down {
                return Err(EnrichError::Unavailable("down".into()));
            }
            check_probs(&self.probs)
        }
        fn locate(&self, _: &str) -> Result<Option<String>, EnrichError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.down {
                return Err(EnrichError::Unavailable("down".into()));
            }
            Ok(self.location.clone())
        }
    }

    fn rec() -> Record {
        let mut r = Record::new("1", "a post", Timestamp(0));
        r.hashtags = vec!["x".into()];
        r
    }

    #[test]
    fn fully_populated_record_is_unchanged() {
        let mut r = rec();
        r.text_embedding = Some(vec![9.0, 9.0]);
        r.hashtag_embeddings = Some(vec![vec![8.0, 8.0]]);
        r.sentiment = Some([1.0, 0.0, 0.0]);
        r.location = Some("oslo".into());
        let f = Fake::new();
        let out = enrich(r.clone(), &f).unwrap();
        assert_eq!(out.record, r);
        assert!(!out.unenriched);
        assert_eq!(f.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn fills_missing_fields() {
        let mut f = Fake::new();
        f.location = Some("lyon".into());
        let out = enrich(rec(), &f).unwrap();
        assert_eq!(out.record.text_embedding, Some(vec![6.0, 1.0]));
        assert_eq!(out.record.hashtag_embeddings, Some(vec![vec![1.0, 1.0]]));
        assert_eq!(out.record.sentiment, Some([0.1, 0.2, 0.7]));
        assert_eq!(out.record.location.as_deref(), Some("lyon"));
    }

    #[test]
    fn no_named_location_stays_absent() {
        let out = enrich(rec(), &Fake::new()).unwrap();
        assert_eq!(out.record.location, None);
    }

    #[test]
    fn two_element_sentiment_is_a_shape_error() {
        let mut f = Fake::new();
        f.probs = vec![0.5, 0.5];
        assert!(matches!(enrich(rec(), &f), Err(EnrichError::Shape(_))));
    }

    #[test]
    fn unavailable_service_flags_record() {
        let mut f = Fake::new();
        f.down = true;
        let out = enrich(rec(), &f).unwrap();
        assert!(out.unenriched);
        assert_eq!(out.record, rec());
    }

    #[test]
    fn batch_keeps_order() {
        let records: Vec<Record> = (0..7)
            .map(|i| Record::new(i.to_string(), "x".repeat(i + 1), Timestamp(0)))
            .collect();
        let out = enrich_batch(records, &Fake::new(), 3);
        for (i, r) in out.iter().enumerate() {
            let r = r.as_ref().unwrap();
            assert_eq!(r.record.id, i.to_string());
            assert_eq!(r.record.text_embedding.as_ref().unwrap()[0], (i + 1) as f32);
        }
    }
}

//! Seeded, labeled synthetic corpora.
//!
//! Topic centroids are unit vectors with a common component, so every pair of
//! centroids has the same cosine distance (`separation`). Records scatter
//! around their centroid with an expected cosine distance of `spread`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hvd_core::encode::SentimentClass;
use hvd_core::{Record, Timestamp};
use rand::seq::IndexedRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::record_json::write_record;
use crate::sidecar::SidecarWriter;
use crate::{timefmt, HvdError, Result};

pub const DEFAULT_LANGUAGES: [&str; 4] = ["en-uk", "en-us", "fr-fr", "de-de"];
pub const DEFAULT_LOCATIONS: [&str; 6] = ["london", "paris", "berlin", "new york", "madrid", "oslo"];
/// Probability that a record carries a location.
pub const LOCATION_RATE: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpusConfig {
    pub topics: usize,
    pub per_topic: usize,
    pub embedding_dim: usize,
    /// Cosine distance between any two topic centroids.
    pub separation: f64,
    /// Expected cosine distance from a record embedding to its centroid.
    pub spread: f64,
    /// Range of the dominant sentiment probability; the other two classes
    /// always stay below it.
    #[serde(default = "default_sentiment_confidence")]
    pub sentiment_confidence: [f64; 2],
    pub languages: Vec<String>,
    pub locations: Vec<String>,
    #[serde(with = "timefmt::serde_ts")]
    pub start: Timestamp,
    #[serde(with = "timefmt::serde_ts")]
    pub end: Timestamp,
    pub seed: u64,
}

impl Default for SyntheticCorpusConfig {
    fn default() -> Self {
        Self {
            topics: 3,
            per_topic: 3000,
            embedding_dim: 768,
            separation: 0.9,
            spread: 0.5,
            sentiment_confidence: default_sentiment_confidence(),
            languages: DEFAULT_LANGUAGES.iter().map(|s| s.to_string()).collect(),
            locations: DEFAULT_LOCATIONS.iter().map(|s| s.to_string()).collect(),
            start: Timestamp::from_civil(2022, 1, 1, 0, 0, 0).expect("valid date"),
            end: Timestamp::from_civil(2023, 1, 1, 0, 0, 0).expect("valid date"),
            seed: 1,
        }
    }
}

fn default_sentiment_confidence() -> [f64; 2] {
    [0.6, 0.95]
}

/// Ground truth for one record. Only the scorer reads these.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub id: String,
    pub topic: usize,
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    pub sentiment: String,
    #[serde(with = "timefmt::serde_ts")]
    pub created_at: Timestamp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub config: SyntheticCorpusConfig,
    pub records: Vec<Record>,
    pub labels: Vec<Label>,
    pub centroids: Vec<Vec<f64>>,
}

const TOPIC_WORDS: [&[&str]; 3] = [
    &[
        "storm", "rain", "flood", "wind", "forecast", "warning", "river", "coast", "snow", "heat",
        "drought", "thunder", "cloud", "temperature", "evacuation",
    ],
    &[
        "match", "goal", "striker", "league", "referee", "stadium", "transfer", "coach", "keeper",
        "penalty", "derby", "fans", "season", "trophy", "injury",
    ],
    &[
        "election", "vote", "ballot", "candidate", "debate", "parliament", "minister", "policy",
        "campaign", "poll", "turnout", "coalition", "budget", "reform", "senate",
    ],
];

const COMMON_WORDS: [&str; 12] = [
    "the", "a", "today", "this", "is", "and", "new", "just", "so", "we", "now", "more",
];

fn topic_vocabulary(topic: usize) -> Vec<String> {
    match TOPIC_WORDS.get(topic) {
        Some(words) => words.iter().map(|w| w.to_string()).collect(),
        None => (0..15).map(|i| format!("topic{topic}word{i}")).collect(),
    }
}

fn topic_tags(topic: usize) -> Vec<String> {
    match topic {
        0 => ["weather", "storm", "climate", "flood"].map(String::from).to_vec(),
        1 => ["football", "matchday", "goal", "league"].map(String::from).to_vec(),
        2 => ["election", "vote", "politics", "debate"].map(String::from).to_vec(),
        t => (0..4).map(|i| format!("topic{t}tag{i}")).collect(),
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

/// `n` orthonormal vectors by Gram-Schmidt over Gaussian draws.
fn orthonormal(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    while out.len() < n {
        let mut v = normal_vec(rng, d);
        for u in &out {
            let p = dot(&v, u);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
        if dot(&v, &v) > 1e-12 {
            normalize(&mut v);
            out.push(v);
        }
    }
    out
}

impl SyntheticCorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.topics == 0 || self.per_topic == 0 {
            return Err(HvdError::Usage("topic count and records per topic must be positive".into()));
        }
        if self.embedding_dim == 0 {
            return Err(HvdError::Usage("embedding dimension must be positive".into()));
        }
        if !(self.separation > 0.0 && self.separation <= 1.0) {
            return Err(HvdError::Usage(format!("separation {} outside (0, 1]", self.separation)));
        }
        if !(self.spread >= 0.0 && self.spread < 1.0) {
            return Err(HvdError::Usage(format!("spread {} outside [0, 1)", self.spread)));
        }
        if self.separation <= self.spread {
            return Err(HvdError::Usage(format!(
                "separation {} must exceed spread {}",
                self.separation, self.spread
            )));
        }
        if self.topics > 1 && self.topics + 1 > self.embedding_dim {
            return Err(HvdError::Data(format!(
                "{} topics at separation {} need {} dimensions, have {}",
                self.topics,
                self.separation,
                self.topics + 1,
                self.embedding_dim
            )));
        }
        let [lo, hi] = self.sentiment_confidence;
        if !(lo > 1.0 / 3.0 && lo <= hi && hi <= 1.0) {
            return Err(HvdError::Usage(format!(
                "sentiment confidence range [{lo}, {hi}] must lie in (1/3, 1]"
            )));
        }
        if self.languages.is_empty() {
            return Err(HvdError::Usage("language list is empty".into()));
        }
        if self.end.0 <= self.start.0 {
            return Err(HvdError::Usage("time range end must follow start".into()));
        }
        Ok(())
    }
}

/// Unit centroids with pairwise cosine `1 - separation`.
fn centroids(cfg: &SyntheticCorpusConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    if cfg.topics == 1 {
        let mut v = normal_vec(rng, cfg.embedding_dim);
        normalize(&mut v);
        return vec![v];
    }
    let basis = orthonormal(rng, cfg.topics + 1, cfg.embedding_dim);
    let (shared, own) = basis.split_first().expect("non-empty");
    let a = (1.0 - cfg.separation).sqrt();
    let b = cfg.separation.sqrt();
    own.iter()
        .map(|e| shared.iter().zip(e).map(|(s, x)| a * s + b * x).collect())
        .collect()
}

/// Unit vector at expected cosine distance `spread` from unit `center`.
fn scatter(center: &[f64], spread: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = center.len();
    // |noise| = tan(angle) for noise orthogonal to the center; Gaussian noise
    // in high dimension is close to orthogonal.
    let norm = (1.0 / (1.0 - spread).powi(2) - 1.0).sqrt();
    let sigma = norm / (d as f64).sqrt();
    let mut v: Vec<f64> = center
        .iter()
        .map(|c| c + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    normalize(&mut v);
    v
}

fn sentiment(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> [f64; 3] {
    let class = rng.random_range(0..3usize);
    let p = if lo < hi { rng.random_range(lo..hi) } else { lo };
    let rest = 1.0 - p;
    // both shares of the remainder stay below p
    let bound = (p / rest).min(1.0);
    let split = rng.random_range((1.0 - bound)..=bound);
    let mut out = [0.0; 3];
    out[class] = p;
    out[(class + 1) % 3] = rest * split;
    out[(class + 2) % 3] = rest * (1.0 - split);
    out
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

pub fn synth_corpus(cfg: &SyntheticCorpusConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let centroids = centroids(cfg, &mut rng);
    let tags: Vec<Vec<String>> = (0..cfg.topics).map(topic_tags).collect();
    // one embedding per tag, close to its topic
    let mut tag_embeddings: HashMap<String, Vec<f32>> = HashMap::new();
    for (t, list) in tags.iter().enumerate() {
        for tag in list {
            let v = scatter(&centroids[t], cfg.spread, &mut rng);
            tag_embeddings.entry(tag.clone()).or_insert_with(|| to_f32(&v));
        }
    }
    let vocab: Vec<Vec<String>> = (0..cfg.topics).map(topic_vocabulary).collect();
    let span = (cfg.end.0 - cfg.start.0) as u64;

    let total = cfg.topics * cfg.per_topic;
    let mut records = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let width = total.to_string().len();
    for i in 0..total {
        // interleave topics so ids do not reveal the label
        let topic = i % cfg.topics;
        let id = format!("r{:0width$}", i, width = width);
        let emb = scatter(&centroids[topic], cfg.spread, &mut rng);
        let n_words = rng.random_range(6..14);
        let words: Vec<&str> = (0..n_words)
            .map(|_| {
                if rng.random_bool(0.7) {
                    vocab[topic].choose(&mut rng).expect("vocabulary").as_str()
                } else {
                    COMMON_WORDS.choose(&mut rng).expect("common words")
                }
            })
            .collect();
        let n_tags = rng.random_range(0..3usize);
        let mut rec_tags: Vec<String> = Vec::new();
        for _ in 0..n_tags {
            let t = tags[topic].choose(&mut rng).expect("tags").clone();
            if !rec_tags.contains(&t) {
                rec_tags.push(t);
            }
        }
        let language = cfg.languages.choose(&mut rng).expect("languages").clone();
        let location = if !cfg.locations.is_empty() && rng.random_bool(LOCATION_RATE) {
            cfg.locations.choose(&mut rng).cloned()
        } else {
            None
        };
        let sent = sentiment(&mut rng, cfg.sentiment_confidence);
        let created_at = Timestamp(cfg.start.0 + rng.random_range(0..span) as i64);

        let mut text = words.join(" ");
        for t in &rec_tags {
            text.push_str(" #");
            text.push_str(t);
        }
        let mut rec = Record::new(id.clone(), text, created_at);
        rec.hashtag_embeddings = if rec_tags.is_empty() {
            None
        } else {
            Some(rec_tags.iter().map(|t| tag_embeddings[t].clone()).collect())
        };
        rec.hashtags = rec_tags;
        rec.language = language.clone();
        rec.location = location.clone();
        rec.sentiment = Some(sent);
        rec.text_embedding = Some(to_f32(&emb));
        labels.push(Label {
            id,
            topic,
            language,
            location,
            sentiment: SentimentClass::argmax(&sent).name().to_string(),
            created_at,
        });
        records.push(rec);
    }
    Ok(SyntheticCorpus {
        config: cfg.clone(),
        records,
        labels,
        centroids,
    })
}

/// Paths written by [`write_corpus`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusFiles {
    pub records: PathBuf,
    pub embeddings: PathBuf,
    pub labels: PathBuf,
    /// The generating configuration, so evaluation reports can echo the seed.
    pub config: PathBuf,
}

impl CorpusFiles {
    pub fn for_output(out: &Path) -> Self {
        let with = |suffix: &str| {
            let mut s = out.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        };
        Self {
            records: out.to_path_buf(),
            embeddings: with(".emb"),
            labels: with(".labels.jsonl"),
            config: with(".corpus.json"),
        }
    }
}

/// Writes records (JSON lines, no inline embeddings), an embedding sidecar
/// (text embeddings by record id, hashtag embeddings by `#tag`) and labels.
pub fn write_corpus(corpus: &SyntheticCorpus, out: &Path) -> Result<CorpusFiles> {
    let files = CorpusFiles::for_output(out);
    let mut w = BufWriter::new(File::create(&files.records)?);
    for r in &corpus.records {
        write_record(&mut w, r, false)?;
    }
    w.flush()?;

    let mut side = SidecarWriter::new(BufWriter::new(File::create(&files.embeddings)?), corpus.config.embedding_dim)?;
    let mut seen_tags = std::collections::BTreeSet::new();
    for r in &corpus.records {
        side.write(&r.id, r.text_embedding.as_deref().expect("synthetic records carry embeddings"))?;
        if let Some(embs) = &r.hashtag_embeddings {
            for (t, e) in r.hashtags.iter().zip(embs) {
                if seen_tags.insert(t.clone()) {
                    side.write(&format!("#{t}"), e)?;
                }
            }
        }
    }
    side.finish()?.flush()?;

    let mut w = BufWriter::new(File::create(&files.labels)?);
    for l in &corpus.labels {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    std::fs::write(&files.config, serde_json::to_string_pretty(&corpus.config)? + "\n")?;
    Ok(files)
}

pub fn read_labels(path: &Path) -> Result<Vec<Label>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(line)
                .map_err(|e| HvdError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

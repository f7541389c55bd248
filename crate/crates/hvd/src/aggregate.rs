//! Aggregations over matched records, computed from stored fields.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use hvd_core::{Record, Timestamp};
use serde::{Deserialize, Serialize};

use crate::{timefmt, HvdError, Result};

pub const TOP_WORDS: usize = 100;

const STOP_WORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be", "been",
    "but", "by", "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he",
    "her", "here", "him", "his", "how", "i", "if", "in", "into", "is", "it", "its", "just", "me",
    "more", "my", "no", "not", "now", "of", "on", "or", "our", "out", "she", "so", "some", "than",
    "that", "the", "their", "them", "then", "there", "these", "they", "this", "to", "too", "up",
    "us", "was", "we", "were", "what", "when", "where", "which", "who", "will", "with", "would",
    "you", "your",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationKind {
    Volume,
    SentimentOverTime,
    WordFrequencies,
}

impl FromStr for AggregationKind {
    type Err = HvdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volume" => Ok(Self::Volume),
            "sentiment_over_time" => Ok(Self::SentimentOverTime),
            "word_frequencies" => Ok(Self::WordFrequencies),
            _ => Err(HvdError::Usage(format!(
                "unknown aggregation {s:?} (volume, sentiment_over_time, word_frequencies)"
            ))),
        }
    }
}

/// Bucket width in seconds: `"3600"`, `"90s"`, `"15m"`, `"1h"`, `"1d"`, `"1w"`.
pub fn parse_bucket(s: &str) -> Result<i64> {
    let s = s.trim();
    let (num, unit) = match s.find(|c: char| !c.is_ascii_digit()) {
        Some(i) => s.split_at(i),
        None => (s, "s"),
    };
    let n: i64 = num
        .parse()
        .map_err(|_| HvdError::Usage(format!("bad bucket width {s:?}")))?;
    let scale = match unit {
        "s" => 1,
        "m" => 60,
        "h" => 3600,
        "d" => 86_400,
        "w" => 7 * 86_400,
        _ => return Err(HvdError::Usage(format!("bad bucket unit in {s:?}"))),
    };
    let w = n
        .checked_mul(scale)
        .ok_or_else(|| HvdError::Usage(format!("bucket width {s:?} too large")))?;
    if w == 0 {
        return Err(HvdError::Usage("bucket width must be positive".into()));
    }
    Ok(w)
}

fn bucket_start(ts: Timestamp, width: i64) -> i64 {
    ts.0.div_euclid(width) * width
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumePoint {
    pub start: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentimentPoint {
    pub start: String,
    /// Records in the bucket with a sentiment value.
    pub count: usize,
    /// Mean negative, neutral, positive probabilities.
    pub mean: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCount {
    pub token: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Aggregation {
    Volume(Vec<VolumePoint>),
    SentimentOverTime(Vec<SentimentPoint>),
    WordFrequencies(Vec<WordCount>),
}

/// Counts per epoch-aligned bucket; empty buckets are omitted.
pub fn volume(records: &[&Record], width: i64) -> Vec<VolumePoint> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(bucket_start(r.created_at, width)).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(s, count)| VolumePoint {
            start: timefmt::format(Timestamp(s)),
            count,
        })
        .collect()
}

pub fn sentiment_over_time(records: &[&Record], width: i64) -> Vec<SentimentPoint> {
    let mut sums: BTreeMap<i64, (usize, [f64; 3])> = BTreeMap::new();
    for r in records {
        if let Some(s) = r.sentiment {
            let e = sums.entry(bucket_start(r.created_at, width)).or_default();
            e.0 += 1;
            for i in 0..3 {
                e.1[i] += s[i];
            }
        }
    }
    sums.into_iter()
        .map(|(s, (n, sum))| SentimentPoint {
            start: timefmt::format(Timestamp(s)),
            count: n,
            mean: sum.map(|x| x / n as f64),
        })
        .collect()
}

/// Lowercased alphanumeric runs, stop words removed.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric() && c != '\'')
        .map(|t| t.trim_matches('\'').to_lowercase())
        .filter(|t| !t.is_empty() && !STOP_WORDS.contains(&t.as_str()))
}

/// Top tokens by count, ties alphabetical.
pub fn word_frequencies(records: &[&Record], top: usize) -> Vec<WordCount> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for r in records {
        for t in tokens(&r.text) {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut out: Vec<WordCount> = counts
        .into_iter()
        .map(|(token, count)| WordCount { token, count })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.token.cmp(&b.token)));
    out.truncate(top);
    out
}

pub fn aggregate(records: &[&Record], kind: AggregationKind, bucket: Option<&str>) -> Result<Aggregation> {
    let width = || parse_bucket(bucket.unwrap_or("1d"));
    Ok(match kind {
        AggregationKind::Volume => Aggregation::Volume(volume(records, width()?)),
        AggregationKind::SentimentOverTime => Aggregation::SentimentOverTime(sentiment_over_time(records, width()?)),
        AggregationKind::WordFrequencies => Aggregation::WordFrequencies(word_frequencies(records, TOP_WORDS)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, text: &str, ts: i64, s: Option<[f64; 3]>) -> Record {
        let mut r = Record::new(id, text, Timestamp(ts));
        r.sentiment = s;
        r
    }

    #[test]
    fn buckets() {
        assert_eq!(parse_bucket("1h").unwrap(), 3600);
        assert_eq!(parse_bucket("90").unwrap(), 90);
        assert_eq!(parse_bucket("2d").unwrap(), 172_800);
        assert!(parse_bucket("0h").is_err());
        assert!(parse_bucket("1y").is_err());
        assert!(parse_bucket("").is_err());
    }

    #[test]
    fn empty_match_set() {
        assert!(volume(&[], 60).is_empty());
        assert!(sentiment_over_time(&[], 60).is_empty());
        assert!(word_frequencies(&[], 100).is_empty());
    }

    #[test]
    fn volume_partitions_the_matches() {
        let rs: Vec<Record> = (0..50).map(|i| rec("x", "t", i * 997 - 3000, None)).collect();
        let refs: Vec<&Record> = rs.iter().collect();
        let v = volume(&refs, 3600);
        assert_eq!(v.iter().map(|p| p.count).sum::<usize>(), 50);
        assert_eq!(v[0].start, "1969-12-31T23:00:00Z");
    }

    #[test]
    fn sentiment_means() {
        let a = rec("a", "t", 10, Some([0.2, 0.2, 0.6]));
        let b = rec("b", "t", 20, Some([0.4, 0.4, 0.2]));
        let c = rec("c", "t", 30, None);
        let s = sentiment_over_time(&[&a, &b, &c], 3600);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].count, 2);
        assert!((s[0].mean[0] - 0.3).abs() < 1e-12 && (s[0].mean[2] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn single_record_word_counts() {
        let r = rec("a", "Storm warning: the STORM is here, storm's eye #storm", 0, None);
        let w = word_frequencies(&[&r], 100);
        assert_eq!(
            w,
            vec![
                WordCount { token: "storm".into(), count: 3 },
                WordCount { token: "eye".into(), count: 1 },
                WordCount { token: "storm's".into(), count: 1 },
                WordCount { token: "warning".into(), count: 1 },
            ]
        );
    }
}

//! Requests for information: constraint encoding and matching.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use hvd_core::encode::SentimentClass;
use hvd_core::{
    make_query_vectors_sv, match_queries, Attribute, BitHypervector, Fuzziness, TimeComponent, TimeEncoding,
    Timestamp,
};
use serde::{Deserialize, Serialize};

use crate::config::Mode;
use crate::engine::Engine;
use crate::enrich::EnrichmentClient;
use crate::{timefmt, HvdError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TextConstraint {
    /// Free text, embedded through the enrichment service.
    Free(String),
    /// Query by example: the stored embedding of an indexed record.
    Example { example: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<TextConstraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hashtags: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment_class: Option<String>,
    /// `[start, end]`, ISO-8601 UTC, inclusive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_range: Option<[String; 2]>,
}

impl Constraints {
    pub fn is_empty(&self) -> bool {
        self.text.is_none()
            && self.hashtags.is_none()
            && self.language.is_none()
            && self.location.is_none()
            && self.sentiment_class.is_none()
            && self.time_range.is_none()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rfi {
    #[serde(default)]
    pub constraints: Constraints,
    /// Per-attribute thresholds; configured defaults fill the rest.
    #[serde(default)]
    pub fuzziness: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Top-k cut per query; every row when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryInfo {
    pub attribute: String,
    pub threshold: f64,
    /// Rows passing this query's threshold on their own.
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub id: String,
    /// Aligned with `queries`.
    pub distances: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    pub mode: Mode,
    pub queries: Vec<QueryInfo>,
    pub matches: Vec<MatchEntry>,
    pub total: usize,
    pub store_size: usize,
    pub elapsed_ms: f64,
}

impl MatchResponse {
    pub fn ids(&self) -> Vec<&str> {
        self.matches.iter().map(|m| m.id.as_str()).collect()
    }
}

/// Probability that one member's bit survives a majority vote over `n`
/// equally weighted members, ties broken at random.
pub fn member_agreement(n: usize) -> f64 {
    assert!(n >= 1);
    // others agreeing ~ Binomial(n - 1, 1/2)
    let others = n - 1;
    let mut p = 0.0;
    let mut c = 1.0f64; // C(others, k)
    let scale = 0.5f64.powi(others as i32);
    for k in 0..=others {
        if k > 0 {
            c = c * (others - k + 1) as f64 / k as f64;
        }
        let agree = 2 * (k + 1);
        if agree > n {
            p += c * scale;
        } else if agree == n {
            p += 0.5 * c * scale;
        }
    }
    p
}

/// Expected distance from `bind(role, filler)` to a compound of `n` members
/// one of which is `bind(role, f')`, where `filler` and `f'` are `delta` apart.
pub fn expected_compound_distance(n: usize, delta: f64) -> f64 {
    let p = member_agreement(n);
    (1.0 - p) + (2.0 * p - 1.0) * delta
}

/// Calendar unit covering whole days inside a time range.
#[derive(Clone, Debug, PartialEq, Eq)]
struct CalendarUnit {
    year: i64,
    month: Option<u32>,
    day: Option<u32>,
}

fn days_in_month(year: i64, month: u32) -> u32 {
    (28..=31)
        .rev()
        .find(|&d| Timestamp::from_civil(year, month, d, 0, 0, 0).is_ok())
        .expect("every month has 28 days")
}

/// Splits the days from `start` to `end` (inclusive) into whole years, whole
/// months and single days.
fn calendar_units(start: Timestamp, end: Timestamp) -> Vec<CalendarUnit> {
    let mut out = Vec::new();
    let s = start.civil();
    let e = end.civil();
    let (mut y, mut m, mut d) = (s.year, s.month, s.day);
    let last = (e.year, e.month, e.day);
    while (y, m, d) <= last {
        let dim = days_in_month(y, m);
        if m == 1 && d == 1 && (y, 12, 31) <= last {
            out.push(CalendarUnit { year: y, month: None, day: None });
            y += 1;
        } else if d == 1 && (y, m, dim) <= last {
            out.push(CalendarUnit { year: y, month: Some(m), day: None });
            if m == 12 {
                y += 1;
                m = 1;
            } else {
                m += 1;
            }
        } else {
            out.push(CalendarUnit { year: y, month: Some(m), day: Some(d) });
            if d == dim {
                d = 1;
                if m == 12 {
                    y += 1;
                    m = 1;
                } else {
                    m += 1;
                }
            } else {
                d += 1;
            }
            continue;
        }
        d = 1;
    }
    out
}

struct Plan {
    /// Queries matched together: `(label, attribute, vector, threshold)`.
    queries: Vec<(String, Attribute, BitHypervector)>,
    fuzz: Fuzziness,
    /// Component-mode time range: one conjunction per calendar unit.
    units: Vec<Vec<(Attribute, BitHypervector)>>,
    unit_threshold: Fuzziness,
}

impl Engine {
    /// Thresholds for `mode`: configured defaults overridden by `overrides`.
    pub fn fuzziness_for(&self, mode: Mode, overrides: &BTreeMap<String, f64>) -> Result<Fuzziness> {
        let mut f = self.config().default_fuzziness(mode)?;
        for (name, &t) in overrides {
            let a = Attribute::from_name(name)
                .map_err(|_| HvdError::Usage(format!("unknown fuzziness attribute {name:?}")))?;
            f.set(a, t).map_err(|e| HvdError::Usage(e.to_string()))?;
        }
        Ok(f)
    }

    fn text_embedding(&self, t: &TextConstraint, client: Option<&dyn EnrichmentClient>) -> Result<Vec<f32>> {
        match t {
            TextConstraint::Example { example } => {
                let r = self
                    .record(example)
                    .ok_or_else(|| HvdError::NotFound(format!("example record {example:?}")))?;
                r.text_embedding
                    .clone()
                    .ok_or_else(|| HvdError::Usage(format!("example record {example:?} has no stored embedding")))
            }
            TextConstraint::Free(text) => {
                let c = client.ok_or_else(|| {
                    HvdError::Usage("free-text query needs an enrichment service (or use an example record)".into())
                })?;
                c.embed(text).map_err(|e| HvdError::Enrichment(e.to_string()))
            }
        }
    }

    fn plan(&self, rfi: &Rfi, mode: Mode, client: Option<&dyn EnrichmentClient>) -> Result<Plan> {
        let c = &rfi.constraints;
        if c.is_empty() {
            return Err(HvdError::Usage("an RFI needs at least one constraint".into()));
        }
        let enc = self.encoder();
        let mut fuzz = self.fuzziness_for(mode, &rfi.fuzziness)?;
        let mut fillers: Vec<(String, Attribute, BitHypervector)> = Vec::new();

        if let Some(t) = &c.text {
            let e = self.text_embedding(t, client)?;
            let v = enc.text(&e).map_err(|e| HvdError::Usage(format!("text query: {e}")))?;
            fillers.push(("text".into(), Attribute::Text, v));
        }
        if let Some(tags) = &c.hashtags {
            if tags.is_empty() {
                return Err(HvdError::Usage("hashtag constraint is empty".into()));
            }
            let mut embs = Vec::with_capacity(tags.len());
            for tag in tags {
                let e = match self.stored_hashtag_embedding(tag) {
                    Some(e) => e.to_vec(),
                    None => client
                        .ok_or_else(|| HvdError::Usage(format!("no embedding available for hashtag {tag:?}")))?
                        .embed(tag)
                        .map_err(|e| HvdError::Enrichment(e.to_string()))?,
                };
                embs.push(e);
            }
            let refs: Vec<&[f32]> = embs.iter().map(|e| e.as_slice()).collect();
            let v = enc.hashtags(tags, &refs).map_err(|e| HvdError::Usage(format!("hashtag query: {e}")))?;
            fillers.push(("hashtags".into(), Attribute::Hashtags, v));
        }
        if let Some(l) = &c.language {
            let v = enc.lexical(l).map_err(|e| HvdError::Usage(format!("language: {e}")))?;
            fillers.push(("language".into(), Attribute::Language, v));
        }
        if let Some(l) = &c.location {
            let v = enc.lexical(l).map_err(|e| HvdError::Usage(format!("location: {e}")))?;
            fillers.push(("location".into(), Attribute::Location, v));
        }
        if let Some(s) = &c.sentiment_class {
            let class = SentimentClass::from_name(&s.to_ascii_lowercase())
                .ok_or_else(|| HvdError::Usage(format!("unknown sentiment class {s:?}")))?;
            fillers.push(("sentiment".into(), Attribute::Sentiment, enc.sentiment(&class.one_hot())?));
        }

        let mut units = Vec::new();
        let mut unit_threshold = Fuzziness::new();
        if let Some([s, e]) = &c.time_range {
            let start = timefmt::parse(s).map_err(|e| HvdError::Usage(e.to_string()))?;
            let end = timefmt::parse(e).map_err(|e| HvdError::Usage(e.to_string()))?;
            if end < start {
                return Err(HvdError::Usage("time range ends before it starts".into()));
            }
            let tc = &enc.settings().time;
            match tc.encoding {
                TimeEncoding::Level => {
                    let (ws, _) = tc.window(start);
                    let (we, _) = tc.window(end);
                    let seq = enc.level_sequence().expect("level mode");
                    let width = seq.flips_between(ws, we) as f64 / self.dim() as f64;
                    let derived = match mode {
                        // exact distances: admit every window up to the far end
                        Mode::Mv => width + 0.5 / self.dim() as f64,
                        Mode::Sv => {
                            let n = enc.roles().attributes().len();
                            let sigma = 0.5 / (self.dim() as f64).sqrt();
                            expected_compound_distance(n, width) + 3.0 * sigma
                        }
                    };
                    let t = match rfi.fuzziness.get("created_at") {
                        Some(&t) => t,
                        None => derived.min(1.0),
                    };
                    fuzz.set(Attribute::CreatedAt, t)?;
                    fillers.push(("created_at".into(), Attribute::CreatedAt, seq.level(ws).clone()));
                    if we != ws {
                        fillers.push(("created_at_end".into(), Attribute::CreatedAt, seq.level(we).clone()));
                    }
                }
                TimeEncoding::Components => {
                    let mems = enc.component_memories().expect("component mode");
                    let have: HashSet<TimeComponent> = mems.components().collect();
                    for comp in [TimeComponent::Year, TimeComponent::Month, TimeComponent::Day] {
                        if have.contains(&comp) {
                            unit_threshold.set(Attribute::Component(comp), fuzz.require(Attribute::Component(comp))?)?;
                        }
                    }
                    if unit_threshold.iter().next().is_none() {
                        return Err(HvdError::Usage("time components exclude year, month and day".into()));
                    }
                    for u in calendar_units(start, end) {
                        let mut q = Vec::new();
                        let parts = [
                            (TimeComponent::Year, Some(u.year)),
                            (TimeComponent::Month, u.month.map(i64::from)),
                            (TimeComponent::Day, u.day.map(i64::from)),
                        ];
                        for (comp, value) in parts {
                            if let (Some(v), true) = (value, have.contains(&comp)) {
                                let filler = mems
                                    .vector(comp, v)
                                    .map_err(|e| HvdError::Usage(format!("time range: {e}")))?;
                                q.push((Attribute::Component(comp), filler.clone()));
                            }
                        }
                        units.push(q);
                    }
                }
            }
        }

        let queries = match mode {
            Mode::Mv => fillers,
            Mode::Sv => {
                let roles = enc.roles();
                for u in units.iter_mut() {
                    *u = make_query_vectors_sv(u, roles)?;
                }
                let plain: Vec<(Attribute, BitHypervector)> =
                    fillers.iter().map(|(_, a, v)| (*a, v.clone())).collect();
                if plain.is_empty() {
                    Vec::new()
                } else {
                    make_query_vectors_sv(&plain, roles)?
                        .into_iter()
                        .zip(fillers)
                        .map(|((a, v), (label, _, _))| (label, a, v))
                        .collect()
                }
            }
        };
        Ok(Plan {
            queries,
            fuzz,
            units,
            unit_threshold,
        })
    }

    /// Runs an RFI against this snapshot.
    pub fn rfi(&self, rfi: &Rfi, client: Option<&dyn EnrichmentClient>) -> Result<MatchResponse> {
        let started = Instant::now();
        let mode = rfi.mode.unwrap_or_else(|| self.default_mode());
        if rfi.k == Some(0) {
            return Err(HvdError::Usage("k must be at least 1".into()));
        }
        let indices = self.index_set(mode)?;
        let plan = self.plan(rfi, mode, client)?;

        let mut infos = Vec::new();
        // (id, distances) in result order
        let mut rows: Option<Vec<(String, Vec<f64>)>> = None;
        if !plan.queries.is_empty() {
            let qs: Vec<(Attribute, BitHypervector)> =
                plan.queries.iter().map(|(_, a, v)| (*a, v.clone())).collect();
            let out = match_queries(&qs, indices, &plan.fuzz, rfi.k)?;
            for ((label, a, _), cand) in plan.queries.iter().zip(&out.candidates) {
                infos.push(QueryInfo {
                    attribute: label.clone(),
                    threshold: plan.fuzz.require(*a)?,
                    candidates: *cand,
                });
            }
            rows = Some(out.ids.into_iter().zip(out.distances).collect());
        }
        if !plan.units.is_empty() {
            // union over calendar units, in time order
            let mut seen = HashSet::new();
            let mut union: Vec<(String, f64)> = Vec::new();
            for q in &plan.units {
                let out = match_queries(q, indices, &plan.unit_threshold, rfi.k)?;
                for (id, d) in out.ids.into_iter().zip(out.distances) {
                    if seen.insert(id.clone()) {
                        let mean = d.iter().sum::<f64>() / d.len() as f64;
                        union.push((id, mean));
                    }
                }
            }
            let threshold = plan.unit_threshold.iter().map(|(_, t)| t).fold(0.0, f64::max);
            infos.push(QueryInfo {
                attribute: "time_range".into(),
                threshold,
                candidates: union.len(),
            });
            rows = Some(match rows {
                None => union.into_iter().map(|(id, d)| (id, vec![d])).collect(),
                Some(base) => {
                    let by_id: std::collections::HashMap<String, f64> = union.into_iter().collect();
                    base.into_iter()
                        .filter_map(|(id, mut d)| {
                            let t = *by_id.get(&id)?;
                            d.push(t);
                            Some((id, d))
                        })
                        .collect()
                }
            });
        }
        let rows = rows.unwrap_or_default();
        let matches: Vec<MatchEntry> = rows
            .into_iter()
            .map(|(id, distances)| MatchEntry { id, distances })
            .collect();
        Ok(MatchResponse {
            token: None,
            mode,
            queries: infos,
            total: matches.len(),
            matches,
            store_size: self.len(),
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agreement_probabilities() {
        assert_eq!(member_agreement(1), 1.0);
        assert_eq!(member_agreement(2), 0.75);
        assert_eq!(member_agreement(3), 0.75);
        assert!((member_agreement(6) - 21.0 / 32.0).abs() < 1e-12);
        assert!((expected_compound_distance(6, 0.0) - 11.0 / 32.0).abs() < 1e-12);
        assert!((expected_compound_distance(6, 0.5) - 0.5).abs() < 1e-12);
    }

    fn ts(y: i64, m: u32, d: u32) -> Timestamp {
        Timestamp::from_civil(y, m, d, 0, 0, 0).unwrap()
    }

    #[test]
    fn calendar_decomposition() {
        let u = calendar_units(ts(2022, 3, 5), ts(2022, 3, 5));
        assert_eq!(u, vec![CalendarUnit { year: 2022, month: Some(3), day: Some(5) }]);
        let u = calendar_units(ts(2022, 1, 1), Timestamp(ts(2022, 12, 31).0 + 3600));
        assert_eq!(u, vec![CalendarUnit { year: 2022, month: None, day: None }]);
        let u = calendar_units(ts(2022, 1, 30), ts(2022, 3, 2));
        assert_eq!(u.len(), 2 + 1 + 2);
        assert_eq!(u[2], CalendarUnit { year: 2022, month: Some(2), day: None });
        let u = calendar_units(ts(2021, 12, 31), ts(2023, 1, 1));
        assert_eq!(u.len(), 3);
        assert_eq!(days_in_month(2024, 2), 29);
        assert_eq!(days_in_month(2023, 2), 28);
    }

    #[test]
    fn rfi_json_shapes() {
        let r: Rfi = serde_json::from_str(
            r#"{"constraints":{"text":{"example":"r1"},"language":"en-uk","time_range":["2022-01-01T00:00:00Z","2022-02-01T00:00:00Z"]},"fuzziness":{"text":0.3},"mode":"sv","k":10}"#,
        )
        .unwrap();
        assert_eq!(r.constraints.text, Some(TextConstraint::Example { example: "r1".into() }));
        assert_eq!(r.mode, Some(Mode::Sv));
        let r: Rfi = serde_json::from_str(r#"{"constraints":{"text":"storm warning"}}"#).unwrap();
        assert_eq!(r.constraints.text, Some(TextConstraint::Free("storm warning".into())));
        assert!(serde_json::from_str::<Rfi>(r#"{"constraints":{"colour":"red"}}"#).is_err());
    }
}

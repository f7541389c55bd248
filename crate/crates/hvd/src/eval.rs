//! Evaluation harness.
//!
//! Matching never reads the labels; they are used only to pick exemplar
//! queries and to score the rankings.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use hvd_core::bsc::derive_seed;
use hvd_core::encode::SentimentClass;
use hvd_core::{
    bind, match_queries, Attribute, BitHypervector, Rng, TimeComponent, TimeEncoding, Timestamp,
};
use serde::{Deserialize, Serialize};

use crate::config::Mode;
use crate::engine::Engine;
use crate::synth::Label;
use crate::{HvdError, Result};

pub const DEFAULT_N: usize = 300;
pub const DEFAULT_EXEMPLAR_SEED: u64 = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Semantic,
    Lexical,
    Sentiment,
    Timestamp,
    All,
}

impl std::str::FromStr for Experiment {
    type Err = HvdError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "semantic" => Self::Semantic,
            "lexical" => Self::Lexical,
            "sentiment" => Self::Sentiment,
            "timestamp" => Self::Timestamp,
            "all" => Self::All,
            _ => return Err(HvdError::Usage(format!("unknown experiment {s:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dim: usize,
    pub modes: Vec<Mode>,
    pub encoder_seed: u64,
    pub corpus_seed: Option<u64>,
    pub time_encoding: String,
    pub records: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticResult {
    pub mode: Mode,
    pub topic: usize,
    pub exemplar: String,
    pub n: usize,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallResult {
    pub mode: Mode,
    pub attribute: String,
    pub value: String,
    /// True records with this value.
    pub count: usize,
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimestampResult {
    pub mode: Mode,
    pub encoding: String,
    /// Fraction of records whose rank falls in their true window position.
    pub accuracy: f64,
    /// Rank correlation between query distance (or placement) and true time.
    pub spearman: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: Option<ConfigEcho>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub semantic: Vec<SemanticResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lexical: Vec<RecallResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sentiment: Vec<RecallResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timestamp: Vec<TimestampResult>,
}

impl EvalReport {
    pub fn semantic_precision(&self, mode: Mode, topic: usize) -> Option<f64> {
        self.semantic
            .iter()
            .find(|r| r.mode == mode && r.topic == topic)
            .map(|r| r.precision)
    }

    pub fn mean_sentiment_recall(&self, mode: Mode) -> Option<f64> {
        let v: Vec<f64> = self.sentiment.iter().filter(|r| r.mode == mode).map(|r| r.recall).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        if let Some(c) = &self.config {
            let modes: Vec<String> = c.modes.iter().map(|m| m.to_string()).collect();
            let _ = writeln!(
                s,
                "dim {}  modes {}  encoder seed {}  corpus seed {}  time {}  records {}",
                c.dim,
                modes.join(","),
                c.encoder_seed,
                c.corpus_seed.map_or("-".into(), |x| x.to_string()),
                c.time_encoding,
                c.records
            );
        }
        if !self.semantic.is_empty() {
            let _ = writeln!(s, "\nsemantic precision@N\n  mode  topic  exemplar      N  precision");
            for r in &self.semantic {
                let _ = writeln!(s, "  {:<4}  {:>5}  {:<10} {:>4}  {:.4}", r.mode, r.topic, r.exemplar, r.n, r.precision);
            }
        }
        for (title, rows) in [("lexical recall", &self.lexical), ("sentiment recall", &self.sentiment)] {
            if rows.is_empty() {
                continue;
            }
            let _ = writeln!(s, "\n{title}\n  mode  attribute  value           count  recall");
            for r in rows.iter() {
                let _ = writeln!(
                    s,
                    "  {:<4}  {:<9}  {:<14} {:>6}  {:.4}",
                    r.mode, r.attribute, r.value, r.count, r.recall
                );
            }
        }
        if !self.timestamp.is_empty() {
            let _ = writeln!(s, "\ntimestamp ordering\n  mode  encoding    accuracy  spearman");
            for r in &self.timestamp {
                let _ = writeln!(s, "  {:<4}  {:<10}  {:.4}    {:+.4}", r.mode, r.encoding, r.accuracy, r.spearman);
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub mode: Mode,
    pub attribute: String,
    pub threshold: f64,
    pub f1: f64,
}

/// Threshold step searched by calibration.
pub const CALIBRATION_STEP: f64 = 0.005;

/// Best threshold on the `CALIBRATION_STEP` grid for `(distance, positive)`
/// pairs sorted by distance; the lowest threshold wins ties.
pub fn best_f1(sorted: &[(f64, bool)]) -> (f64, f64) {
    let total_pos = sorted.iter().filter(|p| p.1).count();
    let zero_tp = sorted.iter().filter(|p| p.0 == 0.0 && p.1).count();
    let zero_fp = sorted.iter().filter(|p| p.0 == 0.0 && !p.1).count();
    let f1 = |tp: usize, fp: usize| {
        let d = 2 * tp + fp + (total_pos - tp);
        if d == 0 { 0.0 } else { 2.0 * tp as f64 / d as f64 }
    };
    let (mut best_t, mut best) = (0.0, f1(zero_tp, zero_fp));
    let (mut tp, mut fp, mut i) = (0, 0, 0);
    let steps = (1.0 / CALIBRATION_STEP).round() as usize;
    for k in 1..=steps {
        let t = k as f64 * CALIBRATION_STEP;
        while i < sorted.len() && sorted[i].0 < t {
            if sorted[i].1 { tp += 1 } else { fp += 1 }
            i += 1;
        }
        let v = f1(tp.max(zero_tp), fp.max(zero_fp));
        if v > best + 1e-12 {
            best = v;
            best_t = t;
        }
    }
    (best_t, best)
}

/// Spearman rank correlation, average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = ranks(x);
    let ry = ranks(y);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Labels joined to engine positions.
pub struct Evaluator<'a> {
    engine: &'a Engine,
    labels: HashMap<&'a str, &'a Label>,
    pub n: usize,
    pub seed: u64,
    /// Days scanned by the component-mode timestamp experiment.
    pub time_range: Option<(Timestamp, Timestamp)>,
}

impl<'a> Evaluator<'a> {
    pub fn new(engine: &'a Engine, labels: &'a [Label]) -> Self {
        Self {
            engine,
            labels: labels.iter().map(|l| (l.id.as_str(), l)).collect(),
            n: DEFAULT_N,
            seed: DEFAULT_EXEMPLAR_SEED,
            time_range: None,
        }
    }

    fn label(&self, id: &str) -> Option<&'a Label> {
        self.labels.get(id).copied()
    }

    /// Labeled records in store order.
    fn labeled(&self) -> impl Iterator<Item = (&'a str, &'a Label)> + '_ {
        self.engine.records().filter_map(|r| self.labels.get_key_value(r.id.as_str()).map(|(k, l)| (*k, *l)))
    }

    fn query_vector(&self, mode: Mode, attr: Attribute, filler: &BitHypervector) -> Result<BitHypervector> {
        Ok(match mode {
            Mode::Mv => filler.clone(),
            Mode::Sv => bind(self.engine.encoder().roles().role(attr)?, filler)?,
        })
    }

    /// Ids of the `k` nearest rows to the query for `attr`.
    fn top(&self, mode: Mode, attr: Attribute, filler: &BitHypervector, k: usize) -> Result<Vec<(String, f64)>> {
        let idx = self.engine.index_set(mode)?.for_attribute(attr)?;
        if idx.is_empty() {
            return Ok(Vec::new());
        }
        let q = self.query_vector(mode, attr, filler)?;
        Ok(idx
            .search(&q, k.max(1))?
            .into_iter()
            .map(|h| (h.id.to_string(), h.distance))
            .collect())
    }

    pub fn semantic(&self, mode: Mode) -> Result<Vec<SemanticResult>> {
        let topics: BTreeSet<usize> = self.labeled().map(|(_, l)| l.topic).collect();
        if self.n > self.engine.len() {
            return Err(HvdError::Usage(format!(
                "N = {} exceeds the corpus size {}",
                self.n,
                self.engine.len()
            )));
        }
        let mut out = Vec::new();
        for topic in topics {
            let pool: Vec<&str> = self
                .labeled()
                .filter(|(id, l)| {
                    l.topic == topic && self.engine.record(id).is_some_and(|r| r.text_embedding.is_some())
                })
                .map(|(id, _)| id)
                .collect();
            if pool.is_empty() {
                continue;
            }
            let mut rng = Rng::from_seed(derive_seed(self.seed, format!("exemplar-{topic}").as_bytes()));
            let exemplar = pool[rng.below(pool.len())];
            let emb = self.engine.record(exemplar).and_then(|r| r.text_embedding.as_ref()).expect("filtered");
            let filler = self.engine.encoder().text(emb)?;
            let top = self.top(mode, Attribute::Text, &filler, self.n)?;
            let hits = top
                .iter()
                .filter(|(id, _)| self.label(id).is_some_and(|l| l.topic == topic))
                .count();
            out.push(SemanticResult {
                mode,
                topic,
                exemplar: exemplar.to_string(),
                n: self.n,
                precision: hits as f64 / self.n as f64,
            });
        }
        Ok(out)
    }

    /// First-x rule: with `x` true records, the `x` nearest are positives.
    fn first_x_recall(&self, mode: Mode, attr: Attribute, filler: &BitHypervector, truth: &BTreeSet<&str>) -> Result<f64> {
        let x = truth.len();
        if x == 0 {
            return Err(HvdError::Usage("value absent from the corpus".into()));
        }
        let top = self.top(mode, attr, filler, x)?;
        let hits = top.iter().filter(|(id, _)| truth.contains(id.as_str())).count();
        Ok(hits as f64 / x as f64)
    }

    pub fn lexical(&self, mode: Mode, attr: Attribute) -> Result<Vec<RecallResult>> {
        let value_of = |l: &'a Label| -> Option<&'a str> {
            match attr {
                Attribute::Language => Some(l.language.as_str()),
                Attribute::Location => l.location.as_deref(),
                _ => None,
            }
        };
        let mut truth: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (id, l) in self.labeled() {
            if let Some(v) = value_of(l) {
                truth.entry(v).or_default().insert(id);
            }
        }
        let mut out = Vec::new();
        for (value, ids) in truth {
            let filler = self.engine.encoder().lexical(value)?;
            out.push(RecallResult {
                mode,
                attribute: attr.name().into(),
                value: value.into(),
                count: ids.len(),
                recall: self.first_x_recall(mode, attr, &filler, &ids)?,
            });
        }
        Ok(out)
    }

    pub fn sentiment(&self, mode: Mode) -> Result<Vec<RecallResult>> {
        let mut out = Vec::new();
        for class in SentimentClass::ALL {
            let ids: BTreeSet<&str> = self
                .labeled()
                .filter(|(_, l)| l.sentiment == class.name())
                .map(|(id, _)| id)
                .collect();
            if ids.is_empty() {
                continue;
            }
            let filler = self.engine.encoder().sentiment(&class.one_hot())?;
            out.push(RecallResult {
                mode,
                attribute: "sentiment".into(),
                value: class.name().into(),
                count: ids.len(),
                recall: self.first_x_recall(mode, Attribute::Sentiment, &filler, &ids)?,
            });
        }
        Ok(out)
    }

    pub fn timestamp(&self, mode: Mode) -> Result<TimestampResult> {
        match self.engine.encoder().settings().time.encoding {
            TimeEncoding::Level => self.timestamp_level(mode),
            TimeEncoding::Components => self.timestamp_components(mode),
        }
    }

    /// Query with the earliest window; accuracy compares each rank position
    /// with the sorted true windows.
    fn timestamp_level(&self, mode: Mode) -> Result<TimestampResult> {
        let enc = self.engine.encoder();
        let tc = &enc.settings().time;
        let filler = enc.level_window(0)?;
        let ranked = self.top(mode, Attribute::CreatedAt, filler, self.engine.len())?;
        let scored: Vec<(&Label, f64)> = ranked
            .iter()
            .filter_map(|(id, d)| self.label(id).map(|l| (l, *d)))
            .collect();
        if scored.is_empty() {
            return Err(HvdError::Usage("no labeled records to score".into()));
        }
        let mut truth: Vec<usize> = scored.iter().map(|(l, _)| tc.window(l.created_at).0).collect();
        truth.sort_unstable();
        let correct = scored
            .iter()
            .zip(&truth)
            .filter(|((l, _), w)| tc.window(l.created_at).0 == **w)
            .count();
        let d: Vec<f64> = scored.iter().map(|(_, d)| *d).collect();
        let t: Vec<f64> = scored.iter().map(|(l, _)| l.created_at.0 as f64).collect();
        Ok(TimestampResult {
            mode,
            encoding: "level".into(),
            accuracy: correct as f64 / scored.len() as f64,
            spearman: spearman(&d, &t),
        })
    }

    fn scan_range(&self) -> Result<(Timestamp, Timestamp)> {
        if let Some(r) = self.time_range {
            return Ok(r);
        }
        let mut it = self.engine.records().map(|r| r.created_at);
        let first = it.next().ok_or_else(|| HvdError::Usage("empty store".into()))?;
        Ok(it.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t))))
    }

    /// Walks the days of the range in order, matching each day's year, month
    /// and day components; a record is placed on the first day it matches,
    /// nearer records first.
    fn timestamp_components(&self, mode: Mode) -> Result<TimestampResult> {
        let enc = self.engine.encoder();
        let mems = enc
            .component_memories()
            .ok_or_else(|| HvdError::Usage("store is not component-encoded".into()))?;
        let comps: Vec<TimeComponent> = [TimeComponent::Year, TimeComponent::Month, TimeComponent::Day]
            .into_iter()
            .filter(|c| mems.memory(*c).is_some())
            .collect();
        if comps.is_empty() {
            return Err(HvdError::Usage("time components exclude year, month and day".into()));
        }
        let fuzz = self.engine.config().default_fuzziness(mode)?;
        let indices = self.engine.index_set(mode)?;
        let (lo, hi) = self.scan_range()?;
        let day_of = |ts: Timestamp| {
            let c = ts.civil();
            (c.year, c.month, c.day)
        };

        let mut placed: HashMap<String, usize> = HashMap::new();
        let mut order: Vec<String> = Vec::new();
        let mut day = Timestamp(lo.0.div_euclid(86_400) * 86_400);
        let mut slot = 0usize;
        while day <= hi {
            let c = day.civil();
            let mut queries = Vec::new();
            for &comp in &comps {
                let v = comp.value(&c);
                let filler = mems.vector(comp, v)?;
                queries.push((Attribute::Component(comp), self.query_vector(mode, Attribute::Component(comp), filler)?));
            }
            let out = match_queries(&queries, indices, &fuzz, None)?;
            let mut fresh: Vec<(f64, usize, String)> = out
                .ids
                .into_iter()
                .zip(out.distances)
                .enumerate()
                .filter(|(_, (id, _))| !placed.contains_key(id))
                .map(|(i, (id, d))| (d.iter().sum::<f64>(), i, id))
                .collect();
            fresh.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (_, _, id) in fresh {
                placed.insert(id.clone(), slot);
                order.push(id);
            }
            slot += 1;
            day = Timestamp(day.0 + 86_400);
        }
        for r in self.engine.records() {
            if !placed.contains_key(&r.id) {
                placed.insert(r.id.clone(), slot);
                order.push(r.id.clone());
            }
        }

        let scored: Vec<(&Label, usize)> = order
            .iter()
            .filter_map(|id| self.label(id).map(|l| (l, placed[id])))
            .collect();
        if scored.is_empty() {
            return Err(HvdError::Usage("no labeled records to score".into()));
        }
        let mut truth: Vec<(i64, u32, u32)> = scored.iter().map(|(l, _)| day_of(l.created_at)).collect();
        truth.sort_unstable();
        let correct = scored
            .iter()
            .zip(&truth)
            .filter(|((l, _), d)| day_of(l.created_at) == **d)
            .count();
        let p: Vec<f64> = scored.iter().map(|(_, s)| *s as f64).collect();
        let t: Vec<f64> = scored.iter().map(|(l, _)| l.created_at.0 as f64).collect();
        Ok(TimestampResult {
            mode,
            encoding: "components".into(),
            accuracy: correct as f64 / scored.len() as f64,
            spearman: spearman(&p, &t),
        })
    }

    /// Every row's distance to `q` on `attr`, in store order.
    fn all_distances(&self, mode: Mode, attr: Attribute, filler: &BitHypervector) -> Result<Vec<(String, f64)>> {
        let idx = self.engine.index_set(mode)?.for_attribute(attr)?;
        let q = self.query_vector(mode, attr, filler)?;
        let mut out = Vec::with_capacity(idx.len());
        for row in 0..idx.len() {
            out.push((idx.id(row).to_string(), idx.vector(row).hamming(&q)?));
        }
        Ok(out)
    }

    /// Per-attribute threshold maximizing micro-averaged F1 over the
    /// attribute's natural queries: topic exemplars for text and hashtags,
    /// every present value for the categorical attributes.
    pub fn calibrate(&self, mode: Mode) -> Result<Vec<Calibration>> {
        let enc = self.engine.encoder();
        let mut per_attr: BTreeMap<Attribute, Vec<(f64, bool)>> = BTreeMap::new();
        let mut add = |attr: Attribute, filler: &BitHypervector, positive: &dyn Fn(&Label) -> bool| -> Result<()> {
            let v = per_attr.entry(attr).or_default();
            for (id, d) in self.all_distances(mode, attr, filler)? {
                if let Some(l) = self.label(&id) {
                    v.push((d, positive(l)));
                }
            }
            Ok(())
        };

        let topics: BTreeSet<usize> = self.labeled().map(|(_, l)| l.topic).collect();
        for &topic in &topics {
            let mut rng = Rng::from_seed(derive_seed(self.seed, format!("calibrate-{topic}").as_bytes()));
            let pool: Vec<&hvd_core::Record> = self
                .labeled()
                .filter(|(_, l)| l.topic == topic)
                .filter_map(|(id, _)| self.engine.record(id))
                .collect();
            if pool.is_empty() {
                continue;
            }
            let r = pool[rng.below(pool.len())];
            if let Some(e) = &r.text_embedding {
                add(Attribute::Text, &enc.text(e)?, &|l| l.topic == topic)?;
            }
            if let Some(r) = pool.iter().find(|r| r.hashtag_embeddings.is_some()) {
                let embs: Vec<&[f32]> = r.hashtag_embeddings.iter().flatten().map(|e| e.as_slice()).collect();
                add(Attribute::Hashtags, &enc.hashtags(&r.hashtags, &embs)?, &|l| l.topic == topic)?;
            }
        }
        let languages: BTreeSet<&str> = self.labeled().map(|(_, l)| l.language.as_str()).collect();
        for v in languages {
            add(Attribute::Language, &enc.lexical(v)?, &|l| l.language == v)?;
        }
        let locations: BTreeSet<&str> = self.labeled().filter_map(|(_, l)| l.location.as_deref()).collect();
        for v in locations {
            add(Attribute::Location, &enc.lexical(v)?, &|l| l.location.as_deref() == Some(v))?;
        }
        for class in SentimentClass::ALL {
            add(Attribute::Sentiment, &enc.sentiment(&class.one_hot())?, &|l| l.sentiment == class.name())?;
        }
        if let Some(mems) = enc.component_memories() {
            for comp in mems.components().collect::<Vec<_>>() {
                let values: BTreeSet<i64> = self.labeled().map(|(_, l)| comp.value(&l.created_at.civil())).collect();
                for v in values {
                    add(Attribute::Component(comp), mems.vector(comp, v)?, &|l| comp.value(&l.created_at.civil()) == v)?;
                }
            }
        }

        Ok(per_attr
            .into_iter()
            .map(|(attr, mut pairs)| {
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let (threshold, f1) = best_f1(&pairs);
                Calibration {
                    mode,
                    attribute: attr.name().into(),
                    threshold,
                    f1,
                }
            })
            .collect())
    }

    pub fn run(&self, which: Experiment, modes: &[Mode]) -> Result<EvalReport> {
        let cfg = self.engine.config();
        let mut report = EvalReport {
            config: Some(ConfigEcho {
                dim: cfg.dim,
                modes: modes.to_vec(),
                encoder_seed: cfg.master_seed,
                corpus_seed: None,
                time_encoding: match self.engine.encoder().settings().time.encoding {
                    TimeEncoding::Level => "level".into(),
                    TimeEncoding::Components => "components".into(),
                },
                records: self.engine.len(),
            }),
            ..Default::default()
        };
        let all = which == Experiment::All;
        for &mode in modes {
            if all || which == Experiment::Semantic {
                report.semantic.extend(self.semantic(mode)?);
            }
            if all || which == Experiment::Lexical {
                report.lexical.extend(self.lexical(mode, Attribute::Language)?);
                report.lexical.extend(self.lexical(mode, Attribute::Location)?);
            }
            if all || which == Experiment::Sentiment {
                report.sentiment.extend(self.sentiment(mode)?);
            }
            if all || which == Experiment::Timestamp {
                report.timestamp.push(self.timestamp(mode)?);
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_picks_the_separating_threshold() {
        let pairs = [(0.1, true), (0.2, true), (0.3, false), (0.4, false)];
        let (t, f) = best_f1(&pairs);
        assert!(t > 0.2 && t <= 0.3, "{t}");
        assert_eq!(f, 1.0);
        let (t, f) = best_f1(&[(0.0, true), (0.5, false)]);
        assert_eq!((t, f), (0.0, 1.0));
    }

    #[test]
    fn spearman_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[10.0, 20.0, 30.0, 40.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
        assert_eq!(spearman(&x, &[1.0; 4]), 0.0);
    }
}

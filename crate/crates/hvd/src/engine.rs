//! In-memory store: records, encoders and indices.
//!
//! An `Engine` is immutable once built. Appending produces a new engine, so
//! readers holding the old one never observe a partial batch.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use hvd_core::record::{assemble_mv, compound, record_rng};
use hvd_core::{Attribute, AttributeVectors, BitHypervector, EncoderSet, HammingIndex, IndexSet, Record};
use serde::Serialize;

use crate::config::{EncoderConfig, Mode};
use crate::record_json::LineError;
use crate::{HvdError, Result};

/// Label prefix of the single-vector index; the registry hash follows.
pub const SV_LABEL_PREFIX: &str = "sv:";
/// Rows projected per batch.
const PROJECT_CHUNK: usize = 256;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AppendReport {
    pub received: usize,
    pub accepted: usize,
    /// Ids already present (in the store or earlier in the batch).
    pub duplicates: usize,
    pub rejected: Vec<LineError>,
    /// Records whose timestamp lay outside the configured range.
    pub clamped: usize,
}

#[derive(Clone, Debug)]
pub struct Engine {
    config: EncoderConfig,
    encoder: Arc<EncoderSet>,
    records: Vec<Arc<Record>>,
    positions: HashMap<String, usize>,
    mv: BTreeMap<Attribute, HammingIndex>,
    sv: Option<HammingIndex>,
}

pub fn sv_label(registry: u64) -> String {
    format!("{SV_LABEL_PREFIX}{registry:016x}")
}

fn check_embedding(v: &[f32], dim: usize) -> std::result::Result<(), String> {
    if v.len() != dim {
        return Err(format!("embedding has {} values, expected {dim}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err("embedding has non-finite values".into());
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err("embedding is all zeros".into());
    }
    Ok(())
}

/// Embedding lengths that disagree with the configuration. Any such record
/// rejects the whole batch.
pub fn embedding_dim_mismatch(records: &[Record], dim: usize) -> Option<String> {
    for r in records {
        let bad = r.text_embedding.as_ref().is_some_and(|e| e.len() != dim)
            || r.hashtag_embeddings
                .as_ref()
                .is_some_and(|h| h.iter().any(|e| e.len() != dim));
        if bad {
            return Some(format!("record {:?} has embeddings of the wrong dimension (expected {dim})", r.id));
        }
    }
    None
}

/// MV encodings for a batch; text and hashtag embeddings are projected in
/// blocks, and identical hashtag embeddings are projected once.
pub fn encode_batch(enc: &EncoderSet, records: &[&Record]) -> Vec<std::result::Result<AttributeVectors, String>> {
    let edim = enc.settings().embedding_dim;
    let mut errors: Vec<Option<String>> = vec![None; records.len()];

    let mut text: Vec<Option<BitHypervector>> = vec![None; records.len()];
    let mut pending: Vec<(usize, &[f32])> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if let Some(e) = &r.text_embedding {
            match check_embedding(e, edim) {
                Ok(()) => pending.push((i, e)),
                Err(m) => errors[i] = Some(format!("text_embedding: {m}")),
            }
        }
    }
    for chunk in pending.chunks(PROJECT_CHUNK) {
        let rows: Vec<&[f32]> = chunk.iter().map(|(_, e)| *e).collect();
        match enc.text_matrix().project_batch(&rows) {
            Ok(vs) => {
                for ((i, _), v) in chunk.iter().zip(vs) {
                    text[*i] = Some(v);
                }
            }
            Err(e) => {
                for (i, _) in chunk {
                    errors[*i] = Some(e.to_string());
                }
            }
        }
    }

    // distinct hashtag embeddings, keyed by their bit patterns
    let mut slot_of: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut uniq: Vec<&[f32]> = Vec::new();
    let mut tag_slots: Vec<Option<Vec<usize>>> = vec![None; records.len()];
    for (i, r) in records.iter().enumerate() {
        if r.hashtags.is_empty() || errors[i].is_some() {
            continue;
        }
        let Some(embs) = &r.hashtag_embeddings else {
            errors[i] = Some("missing hashtag_embeddings".into());
            continue;
        };
        if embs.len() != r.hashtags.len() {
            errors[i] = Some(format!("{} hashtag embeddings for {} hashtags", embs.len(), r.hashtags.len()));
            continue;
        }
        let mut slots = Vec::with_capacity(embs.len());
        for e in embs {
            if let Err(m) = check_embedding(e, edim) {
                errors[i] = Some(format!("hashtag_embeddings: {m}"));
                break;
            }
            let key: Vec<u32> = e.iter().map(|x| x.to_bits()).collect();
            let slot = *slot_of.entry(key).or_insert_with(|| {
                uniq.push(e);
                uniq.len() - 1
            });
            slots.push(slot);
        }
        if errors[i].is_none() {
            tag_slots[i] = Some(slots);
        }
    }
    let mut projected: Vec<BitHypervector> = Vec::with_capacity(uniq.len());
    for chunk in uniq.chunks(PROJECT_CHUNK) {
        match enc.hashtag_matrix().project_batch(chunk) {
            Ok(vs) => projected.extend(vs),
            Err(e) => {
                // validated above, so this is unreachable in practice
                return records.iter().map(|_| Err(e.to_string())).collect();
            }
        }
    }

    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if let Some(e) = errors[i].take() {
                return Err(e);
            }
            let hashtags = match &tag_slots[i] {
                Some(slots) => {
                    let vs: Vec<BitHypervector> = slots.iter().map(|&s| projected[s].clone()).collect();
                    Some(enc.bundle_hashtags(&r.hashtags, &vs).map_err(|e| e.to_string())?)
                }
                None => None,
            };
            let av = assemble_mv(r, enc, text[i].take(), hashtags).map_err(|e| e.to_string())?;
            if av.is_empty() {
                return Err("record has no encodable attribute".into());
            }
            Ok(av)
        })
        .collect()
}

impl Engine {
    /// Empty engine for `config`.
    pub fn new(config: EncoderConfig) -> Result<Self> {
        let encoder = Arc::new(config.encoder_set()?);
        Self::with_encoder(config, encoder)
    }

    pub fn with_encoder(config: EncoderConfig, encoder: Arc<EncoderSet>) -> Result<Self> {
        let dim = config.dim;
        let mut mv = BTreeMap::new();
        if config.modes.contains(&Mode::Mv) {
            for a in config.attributes()? {
                mv.insert(a, HammingIndex::new(a.name(), dim)?);
            }
        }
        let sv = if config.modes.contains(&Mode::Sv) {
            Some(HammingIndex::new(sv_label(encoder.roles().version_hash()), dim)?)
        } else {
            None
        };
        Ok(Self {
            config,
            encoder,
            records: Vec::new(),
            positions: HashMap::new(),
            mv,
            sv,
        })
    }

    /// Encodes `records` into a fresh engine.
    pub fn build(config: EncoderConfig, records: Vec<Record>) -> Result<(Self, AppendReport)> {
        let empty = Self::new(config)?;
        empty.append(records)
    }

    /// Reassembles an engine from stored indices. Index ids must agree with
    /// the records.
    pub fn from_parts(
        config: EncoderConfig,
        records: Vec<Record>,
        mv: BTreeMap<Attribute, HammingIndex>,
        sv: Option<HammingIndex>,
    ) -> Result<Self> {
        let mut e = Self::new(config)?;
        for r in records {
            if e.positions.insert(r.id.clone(), e.records.len()).is_some() {
                return Err(HvdError::Data(format!("duplicate record id {:?}", r.id)));
            }
            e.records.push(Arc::new(r));
        }
        if e.config.modes.contains(&Mode::Mv) {
            for (a, idx) in &mv {
                if !e.mv.contains_key(a) {
                    return Err(HvdError::Mismatch(format!("index for unknown attribute {a}")));
                }
                if idx.dim() != e.config.dim {
                    return Err(HvdError::Mismatch(format!("{a} index has dimension {}", idx.dim())));
                }
                let mut last = None;
                for id in idx.ids() {
                    let pos = e.positions.get(id).ok_or_else(|| {
                        HvdError::Mismatch(format!("{a} index holds unknown id {id:?}"))
                    })?;
                    if last.is_some_and(|l| l >= *pos) {
                        return Err(HvdError::Mismatch(format!("{a} index is not in record order")));
                    }
                    last = Some(*pos);
                }
            }
            if mv.len() != e.mv.len() {
                return Err(HvdError::Mismatch("missing per-attribute index".into()));
            }
            e.mv = mv;
        }
        if e.config.modes.contains(&Mode::Sv) {
            let idx = sv.ok_or_else(|| HvdError::Mismatch("missing single-vector index".into()))?;
            let expect = sv_label(e.encoder.roles().version_hash());
            if idx.label() != expect {
                return Err(HvdError::Mismatch(format!(
                    "single-vector index built with registry {}, encoder has {}",
                    idx.label(),
                    expect
                )));
            }
            if idx.dim() != e.config.dim {
                return Err(HvdError::Mismatch(format!("single-vector index has dimension {}", idx.dim())));
            }
            let same = idx.len() == e.records.len()
                && idx.ids().iter().zip(&e.records).all(|(a, r)| *a == r.id);
            if !same {
                return Err(HvdError::Mismatch("single-vector index ids differ from records".into()));
            }
            e.sv = Some(idx);
        }
        Ok(e)
    }

    /// New engine with `batch` appended. Duplicate ids are skipped; records
    /// that fail to encode are rejected individually. A batch whose embeddings
    /// have the wrong dimension is rejected as a whole.
    pub fn append(&self, batch: Vec<Record>) -> Result<(Self, AppendReport)> {
        if let Some(m) = embedding_dim_mismatch(&batch, self.config.embedding_dim) {
            return Err(HvdError::Mismatch(m));
        }
        let mut report = AppendReport {
            received: batch.len(),
            ..Default::default()
        };
        let mut seen = std::collections::HashSet::new();
        let mut fresh = Vec::new();
        for (i, r) in batch.into_iter().enumerate() {
            if self.positions.contains_key(&r.id) || !seen.insert(r.id.clone()) {
                report.duplicates += 1;
            } else if r.id.is_empty() || r.id.starts_with('#') {
                report.rejected.push(LineError {
                    line: i + 1,
                    id: Some(r.id.clone()),
                    reason: "ids must be non-empty and must not start with '#'".into(),
                });
            } else {
                fresh.push((i, r));
            }
        }
        let refs: Vec<&Record> = fresh.iter().map(|(_, r)| r).collect();
        let encoded = encode_batch(&self.encoder, &refs);

        let mut next = self.clone();
        for ((i, rec), enc) in fresh.into_iter().zip(encoded) {
            let av = match enc {
                Ok(av) => av,
                Err(reason) => {
                    report.rejected.push(LineError {
                        line: i + 1,
                        id: Some(rec.id.clone()),
                        reason,
                    });
                    continue;
                }
            };
            if av.clamped_time {
                report.clamped += 1;
            }
            for (a, v) in av.iter() {
                if let Some(idx) = next.mv.get_mut(&a) {
                    idx.push(rec.id.clone(), v)?;
                }
            }
            if let Some(sv) = next.sv.as_mut() {
                let mut rng = record_rng(&next.encoder, &rec.id);
                let c = compound(&av, next.encoder.roles(), &mut rng)?;
                sv.push(rec.id.clone(), &c.vector)?;
            }
            next.positions.insert(rec.id.clone(), next.records.len());
            next.records.push(Arc::new(rec));
            report.accepted += 1;
        }
        report.rejected.sort_by_key(|e| e.line);
        Ok((next, report))
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn encoder(&self) -> &EncoderSet {
        &self.encoder
    }

    pub fn encoder_arc(&self) -> Arc<EncoderSet> {
        self.encoder.clone()
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl ExactSizeIterator<Item = &Record> + Clone {
        self.records.iter().map(|r| r.as_ref())
    }

    pub fn record(&self, id: &str) -> Option<&Record> {
        self.positions.get(id).map(|&p| self.records[p].as_ref())
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    pub fn record_at(&self, pos: usize) -> &Record {
        &self.records[pos]
    }

    pub fn has_mode(&self, mode: Mode) -> bool {
        match mode {
            Mode::Mv => !self.mv.is_empty(),
            Mode::Sv => self.sv.is_some(),
        }
    }

    /// Preferred mode when a request does not name one.
    pub fn default_mode(&self) -> Mode {
        if self.has_mode(Mode::Mv) {
            Mode::Mv
        } else {
            Mode::Sv
        }
    }

    pub fn mv_indices(&self) -> &BTreeMap<Attribute, HammingIndex> {
        &self.mv
    }

    pub fn sv_index(&self) -> Option<&HammingIndex> {
        self.sv.as_ref()
    }

    /// Index set for `mode`, checking the role registry for single-vector.
    pub fn index_set(&self, mode: Mode) -> Result<IndexSet<'_>> {
        match mode {
            Mode::Mv if self.has_mode(Mode::Mv) => Ok(IndexSet::Multi(&self.mv)),
            Mode::Sv => {
                let idx = self
                    .sv
                    .as_ref()
                    .ok_or_else(|| HvdError::Usage("store has no single-vector index".into()))?;
                let have = self.encoder.roles().version_hash();
                let stored = idx
                    .label()
                    .strip_prefix(SV_LABEL_PREFIX)
                    .and_then(|h| u64::from_str_radix(h, 16).ok())
                    .ok_or_else(|| HvdError::Format(format!("bad single-vector label {:?}", idx.label())))?;
                if stored != have {
                    return Err(hvd_core::Error::RegistryMismatch {
                        expected: stored,
                        found: have,
                    }
                    .into());
                }
                Ok(IndexSet::Single(idx))
            }
            Mode::Mv => Err(HvdError::Usage("store has no per-attribute indices".into())),
        }
    }

    /// Embedding stored for a hashtag on any record, first occurrence.
    pub fn stored_hashtag_embedding(&self, tag: &str) -> Option<&[f32]> {
        self.records.iter().find_map(|r| {
            let i = r.hashtags.iter().position(|t| t == tag)?;
            r.hashtag_embeddings.as_ref().map(|e| e[i].as_slice())
        })
    }
}

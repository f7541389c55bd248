//! Reading input files into a store.
//!
//! Embeddings come from the record line itself, then the sidecar, then the
//! enrichment service, in that order of precedence.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use hvd_core::Record;
use serde::Serialize;

use crate::engine::{embedding_dim_mismatch, Engine};
use crate::enrich::{enrich_batch, EnrichmentClient};
use crate::record_json::{LineError, RecordReader};
use crate::sidecar;
use crate::store::{write_atomic_with, Store};
use crate::synth::{read_labels, Label};
use crate::{HvdError, Result};

/// Default bound on concurrent enrichment calls.
pub const DEFAULT_IN_FLIGHT: usize = 8;

/// Sidecar contents: text embeddings by record id, hashtag embeddings by
/// `#tag`.
#[derive(Clone, Debug, Default)]
pub struct EmbeddingSource {
    pub dim: usize,
    entries: HashMap<String, Vec<Vec<f32>>>,
}

impl EmbeddingSource {
    pub fn load(path: &Path) -> Result<Self> {
        let (dim, entries) = sidecar::load(BufReader::new(File::open(path)?))?;
        Ok(Self { dim, entries })
    }

    pub fn text(&self, id: &str) -> Option<&Vec<f32>> {
        self.entries.get(id).and_then(|v| v.first())
    }

    pub fn hashtag(&self, tag: &str) -> Option<&Vec<f32>> {
        self.entries.get(&format!("#{tag}")).and_then(|v| v.first())
    }

    /// Fills embeddings the record does not carry inline.
    pub fn attach(&self, r: &mut Record) {
        if r.text_embedding.is_none() {
            r.text_embedding = self.text(&r.id).cloned();
        }
        if !r.hashtags.is_empty() && r.hashtag_embeddings.is_none() {
            let found: Option<Vec<Vec<f32>>> = r.hashtags.iter().map(|t| self.hashtag(t).cloned()).collect();
            r.hashtag_embeddings = found;
        }
    }
}

/// Parsed input ready to append.
#[derive(Clone, Debug, Default)]
pub struct IngestInput {
    pub records: Vec<Record>,
    /// Input line of each record.
    pub lines: Vec<usize>,
    pub rejected: Vec<LineError>,
    pub unenriched: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub received: usize,
    pub accepted: usize,
    pub duplicates: usize,
    pub rejected: Vec<LineError>,
    pub unenriched: usize,
    pub clamped: usize,
    /// Whether the records were also encoded into the store's indices.
    pub indexed: bool,
}

/// Streams records from `input`, attaching sidecar embeddings and, when a
/// client is given, enriching whatever is still missing.
pub fn read_input<R: BufRead>(
    input: R,
    embeddings: Option<&EmbeddingSource>,
    client: Option<&dyn EnrichmentClient>,
    in_flight: usize,
) -> Result<IngestInput> {
    let mut out = IngestInput::default();
    for item in RecordReader::new(input) {
        match item? {
            Ok((line, mut r)) => {
                if let Some(src) = embeddings {
                    src.attach(&mut r);
                }
                out.records.push(r);
                out.lines.push(line);
            }
            Err(e) => out.rejected.push(e),
        }
    }
    if let Some(client) = client {
        enrich_input(&mut out, client, in_flight);
    }
    Ok(out)
}

/// Enriches every parsed record; records the client cannot shape are moved
/// to the rejected list.
pub fn enrich_input(input: &mut IngestInput, client: &dyn EnrichmentClient, in_flight: usize) {
    let lines = std::mem::take(&mut input.lines);
    let records = std::mem::take(&mut input.records);
    for (line, res) in lines.into_iter().zip(enrich_batch(records, client, in_flight)) {
        match res {
            Ok(e) => {
                input.unenriched += e.unenriched as usize;
                input.records.push(e.record);
                input.lines.push(line);
            }
            Err(err) => input.rejected.push(LineError {
                line,
                id: None,
                reason: err.to_string(),
            }),
        }
    }
    input.rejected.sort_by_key(|e| e.line);
}

pub fn read_input_file(
    path: &Path,
    embeddings: Option<&Path>,
    client: Option<&dyn EnrichmentClient>,
) -> Result<IngestInput> {
    let src = embeddings.map(EmbeddingSource::load).transpose()?;
    let f = File::open(path).map_err(|e| HvdError::Data(format!("{}: {e}", path.display())))?;
    read_input(BufReader::new(f), src.as_ref(), client, DEFAULT_IN_FLIGHT)
}

/// Appends parsed input to the store: encoded into the indices when the store
/// is indexed, otherwise stored for a later `index` run. Idempotent by id.
pub fn ingest(store: &Store, input: IngestInput) -> Result<IngestReport> {
    let IngestInput {
        records,
        lines,
        mut rejected,
        unenriched,
    } = input;
    let received = records.len() + rejected.len();
    let mut report = IngestReport {
        received,
        unenriched,
        ..Default::default()
    };
    match store.load_config()? {
        Some(_) => {
            let engine = store.load_engine()?;
            let (next, mut rep) = append_input(&engine, IngestInput { records, lines, rejected, unenriched })?;
            if rep.accepted > 0 {
                store.save_engine(&next)?;
            }
            rep.received = received;
            return Ok(rep);
        }
        None => {
            let mut existing = store.load_records()?;
            let dim = existing.iter().find_map(|r| r.text_embedding.as_ref().map(|e| e.len()));
            if let Some(dim) = dim.or_else(|| records.iter().find_map(|r| r.text_embedding.as_ref().map(|e| e.len()))) {
                if let Some(m) = embedding_dim_mismatch(&records, dim) {
                    return Err(HvdError::Mismatch(m));
                }
            }
            let mut ids: BTreeSet<String> = existing.iter().map(|r| r.id.clone()).collect();
            let before = existing.len();
            for (r, line) in records.into_iter().zip(lines) {
                if r.id.starts_with('#') {
                    rejected.push(LineError {
                        line,
                        id: Some(r.id),
                        reason: "ids must not start with '#'".into(),
                    });
                } else if ids.insert(r.id.clone()) {
                    existing.push(r);
                } else {
                    report.duplicates += 1;
                }
            }
            report.accepted = existing.len() - before;
            if report.accepted > 0 {
                store.save_records(existing.iter())?;
            }
        }
    }
    rejected.sort_by_key(|e| e.line);
    report.rejected = rejected;
    Ok(report)
}

/// Encodes parsed input into a copy of `engine`. The input is rejected as a
/// whole on an embedding-dimension mismatch.
pub fn append_input(engine: &Engine, input: IngestInput) -> Result<(Engine, IngestReport)> {
    let IngestInput {
        records,
        lines,
        mut rejected,
        unenriched,
    } = input;
    let received = records.len() + rejected.len();
    let (next, rep) = engine.append(records)?;
    rejected.extend(rep.rejected.into_iter().map(|mut e| {
        e.line = lines[e.line - 1];
        e
    }));
    rejected.sort_by_key(|e| e.line);
    Ok((
        next,
        IngestReport {
            received,
            accepted: rep.accepted,
            duplicates: rep.duplicates,
            rejected,
            unenriched,
            clamped: rep.clamped,
            indexed: true,
        },
    ))
}

/// Merges ground-truth labels into the store's label file, by id.
pub fn import_labels(store: &Store, labels: &Path) -> Result<usize> {
    let mut merged: Vec<Label> = if store.labels_path().exists() {
        read_labels(&store.labels_path())?
    } else {
        Vec::new()
    };
    let mut ids: BTreeSet<String> = merged.iter().map(|l| l.id.clone()).collect();
    let before = merged.len();
    for l in read_labels(labels)? {
        if ids.insert(l.id.clone()) {
            merged.push(l);
        }
    }
    write_atomic_with(&store.labels_path(), |w| {
        for l in &merged {
            serde_json::to_writer(&mut *w, l)?;
            std::io::Write::write_all(w, b"\n")?;
        }
        Ok(())
    })?;
    Ok(merged.len() - before)
}

//! Store-level operations behind the command line.

use std::path::Path;

use hvd_core::{TimeEncoding, Timestamp};
use serde::Serialize;

use crate::config::{ConfigBuilder, Mode, DEFAULT_EMBEDDING_DIM};
use crate::engine::Engine;
use crate::eval::{Calibration, EvalReport, Evaluator, Experiment};
use crate::ingest::{import_labels, ingest, read_input_file, IngestReport};
use crate::enrich::EnrichmentClient;
use crate::rfi::MatchResponse;
use crate::store::Store;
use crate::synth::{read_labels, SyntheticCorpusConfig};
use crate::{HvdError, Result};

#[derive(Clone, Debug)]
pub struct IndexOptions {
    pub dim: usize,
    pub modes: Vec<Mode>,
    pub seed: u64,
    pub time_encoding: TimeEncoding,
    pub levels: Option<usize>,
    pub time_range: Option<(Timestamp, Timestamp)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndexSummary {
    pub records: usize,
    pub modes: Vec<Mode>,
    pub dim: usize,
    /// Modes built by this run; empty when the store was already indexed.
    pub built: Vec<Mode>,
    pub clamped: usize,
}

pub fn corpus_config(store: &Store) -> Result<Option<SyntheticCorpusConfig>> {
    let p = store.corpus_path();
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&std::fs::read_to_string(p)?)?))
}

/// Time range for a new index: explicit, else the synthetic corpus range,
/// else the span of the stored timestamps.
fn time_range_for(store: &Store, records: &[hvd_core::Record], opts: &IndexOptions) -> Result<Option<(Timestamp, Timestamp)>> {
    if opts.time_range.is_some() {
        return Ok(opts.time_range);
    }
    if let Some(c) = corpus_config(store)? {
        return Ok(Some((c.start, c.end)));
    }
    let lo = records.iter().map(|r| r.created_at).min();
    let hi = records.iter().map(|r| r.created_at).max();
    Ok(lo.zip(hi).map(|(lo, hi)| (lo, Timestamp(hi.0.max(lo.0) + 1))))
}

/// Encodes the stored records. A store holds one dimension and seed; adding
/// a mode to an indexed store re-encodes it with the stored settings.
pub fn index(store: &Store, opts: &IndexOptions) -> Result<IndexSummary> {
    if opts.modes.is_empty() {
        return Err(HvdError::Usage("at least one mode is required".into()));
    }
    let records = store.load_records()?;
    let existing = store.load_config()?;
    let config = match &existing {
        Some(cfg) => {
            if cfg.dim != opts.dim || cfg.master_seed != opts.seed {
                return Err(HvdError::Mismatch(format!(
                    "store is indexed at {} bits with seed {}; requested {} bits with seed {}",
                    cfg.dim, cfg.master_seed, opts.dim, opts.seed
                )));
            }
            let missing: Vec<Mode> = opts.modes.iter().copied().filter(|m| !cfg.modes.contains(m)).collect();
            if missing.is_empty() {
                return Ok(IndexSummary {
                    records: records.len(),
                    modes: cfg.modes.clone(),
                    dim: cfg.dim,
                    built: Vec::new(),
                    clamped: 0,
                });
            }
            let mut cfg = cfg.clone();
            cfg.modes.extend(missing);
            cfg.modes.sort();
            cfg.modes.dedup();
            cfg
        }
        None => {
            let embedding_dim = records
                .iter()
                .find_map(|r| r.text_embedding.as_ref().map(|e| e.len()))
                .unwrap_or(DEFAULT_EMBEDDING_DIM);
            let mut b = ConfigBuilder::new(opts.dim, opts.seed)
                .embedding_dim(embedding_dim)
                .modes(&opts.modes)
                .time_encoding(opts.time_encoding);
            if let Some(m) = opts.levels {
                b = b.levels(m);
            }
            if let Some((s, e)) = time_range_for(store, &records, opts)? {
                b = b.time_range(s, e);
            }
            b.build()?
        }
    };
    let built: Vec<Mode> = config
        .modes
        .iter()
        .copied()
        .filter(|m| existing.as_ref().is_none_or(|c| !c.modes.contains(m)))
        .collect();
    let (engine, rep) = Engine::build(config, records)?;
    if let Some(e) = rep.rejected.first() {
        return Err(HvdError::Data(format!("record {}: {}", e.id.as_deref().unwrap_or("?"), e.reason)));
    }
    store.save_engine(&engine)?;
    Ok(IndexSummary {
        records: engine.len(),
        modes: engine.config().modes.clone(),
        dim: engine.dim(),
        built,
        clamped: rep.clamped,
    })
}

/// Ingests `input` and imports its companion files: `<input>.labels.jsonl`
/// and `<input>.corpus.json` when present.
pub fn ingest_file(
    store: &Store,
    input: &Path,
    embeddings: Option<&Path>,
    client: Option<&dyn EnrichmentClient>,
) -> Result<IngestReport> {
    let parsed = read_input_file(input, embeddings, client)?;
    let report = ingest(store, parsed)?;
    let companion = |suffix: &str| {
        let mut s = input.as_os_str().to_owned();
        s.push(suffix);
        std::path::PathBuf::from(s)
    };
    let labels = companion(".labels.jsonl");
    if labels.exists() {
        import_labels(store, &labels)?;
    }
    let corpus = companion(".corpus.json");
    if corpus.exists() && !store.corpus_path().exists() {
        std::fs::copy(&corpus, store.corpus_path())?;
    }
    Ok(report)
}

pub struct EvalOptions {
    pub experiment: Experiment,
    pub modes: Option<Vec<Mode>>,
    pub n: usize,
    pub seed: u64,
}

pub fn eval(store: &Store, opts: &EvalOptions) -> Result<EvalReport> {
    let engine = store.load_engine()?;
    let labels = load_labels(store)?;
    let corpus = corpus_config(store)?;
    let mut ev = Evaluator::new(&engine, &labels);
    ev.n = opts.n;
    ev.seed = opts.seed;
    ev.time_range = corpus.as_ref().map(|c| (c.start, c.end));
    let modes = opts.modes.clone().unwrap_or_else(|| engine.config().modes.clone());
    for m in &modes {
        if !engine.has_mode(*m) {
            return Err(HvdError::Mismatch(format!("store has no {m} index")));
        }
    }
    let mut report = ev.run(opts.experiment, &modes)?;
    if let Some(c) = report.config.as_mut() {
        c.corpus_seed = corpus.map(|c| c.seed);
    }
    Ok(report)
}

pub fn calibrate(store: &Store, modes: Option<Vec<Mode>>) -> Result<Vec<Calibration>> {
    let engine = store.load_engine()?;
    let labels = load_labels(store)?;
    let ev = Evaluator::new(&engine, &labels);
    let modes = modes.unwrap_or_else(|| engine.config().modes.clone());
    let mut out = Vec::new();
    for m in modes {
        out.extend(ev.calibrate(m)?);
    }
    Ok(out)
}

fn load_labels(store: &Store) -> Result<Vec<crate::synth::Label>> {
    let p = store.labels_path();
    if !p.exists() {
        return Err(HvdError::NotFound(format!(
            "{} has no labels; ingest a labeled corpus first",
            store.dir().display()
        )));
    }
    read_labels(&p)
}

/// Plain-text rendering of a match response.
pub fn match_table(engine: &Engine, resp: &MatchResponse) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let names: Vec<&str> = resp.queries.iter().map(|q| q.attribute.as_str()).collect();
    for q in &resp.queries {
        let _ = writeln!(s, "# {:<10} threshold {:.4}  candidates {}", q.attribute, q.threshold, q.candidates);
    }
    let _ = writeln!(
        s,
        "# {} matches of {} records ({} mode, {:.1} ms)",
        resp.total, resp.store_size, resp.mode, resp.elapsed_ms
    );
    let widths: Vec<usize> = names.iter().map(|n| n.len().max(8)).collect();
    let header: String = names.iter().zip(&widths).map(|(n, w)| format!(" {n:>w$}")).collect();
    let _ = writeln!(s, "{:<12}{header}  text", "id");
    for m in &resp.matches {
        let text = engine.record(&m.id).map(|r| r.text.as_str()).unwrap_or("");
        let snippet: String = text.chars().take(60).collect();
        let d: String = m.distances.iter().zip(&widths).map(|(d, w)| format!(" {d:>w$.4}")).collect();
        let _ = writeln!(s, "{:<12} {d}  {snippet}", m.id);
    }
    s
}

//! On-disk store layout.
//!
//! ```text
//! DIR/records.jsonl        records without embeddings, in insertion order
//! DIR/embeddings.emb       text embeddings keyed by record id
//! DIR/hashtags.emb         hashtag embeddings, one entry per hashtag, keyed by record id
//! DIR/labels.jsonl         optional ground truth for the evaluation harness
//! DIR/corpus.json          optional synthetic-corpus configuration
//! DIR/encoder.json         encoder configuration (written by `index`)
//! DIR/index/mv-<attr>.hvix one per attribute
//! DIR/index/sv.hvix        compound index
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use hvd_core::{Attribute, Record};

use crate::config::{EncoderConfig, Mode};
use crate::engine::Engine;
use crate::index_file::{read_index, write_index, FLAG_SINGLE_VECTOR};
use crate::record_json::{write_record, RecordReader};
use crate::sidecar::{SidecarReader, SidecarWriter};
use crate::{HvdError, Result};

/// Writes through a temporary file and renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic_with(path, |w| {
        w.write_all(bytes)?;
        Ok(())
    })
}

pub fn write_atomic_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        f(&mut w)?;
        w.flush()?;
        w.get_ref().sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Store {
    dir: PathBuf,
}

impl Store {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn records_path(&self) -> PathBuf {
        self.dir.join("records.jsonl")
    }

    pub fn embeddings_path(&self) -> PathBuf {
        self.dir.join("embeddings.emb")
    }

    pub fn hashtags_path(&self) -> PathBuf {
        self.dir.join("hashtags.emb")
    }

    pub fn labels_path(&self) -> PathBuf {
        self.dir.join("labels.jsonl")
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.dir.join("corpus.json")
    }

    pub fn config_path(&self) -> PathBuf {
        self.dir.join("encoder.json")
    }

    pub fn index_dir(&self) -> PathBuf {
        self.dir.join("index")
    }

    pub fn mv_index_path(&self, a: Attribute) -> PathBuf {
        self.index_dir().join(format!("mv-{}.hvix", a.name()))
    }

    pub fn sv_index_path(&self) -> PathBuf {
        self.index_dir().join("sv.hvix")
    }

    pub fn has_records(&self) -> bool {
        self.records_path().exists()
    }

    pub fn load_config(&self) -> Result<Option<EncoderConfig>> {
        let p = self.config_path();
        if !p.exists() {
            return Ok(None);
        }
        EncoderConfig::load(&p).map(Some)
    }

    /// Stored records with embeddings attached.
    pub fn load_records(&self) -> Result<Vec<Record>> {
        let p = self.records_path();
        if !p.exists() {
            return Ok(Vec::new());
        }
        let mut records = Vec::new();
        for item in RecordReader::new(BufReader::new(File::open(&p)?)) {
            let (_, r) = item?.map_err(|e| HvdError::Data(format!("{}: {e}", p.display())))?;
            records.push(r);
        }
        let pos: HashMap<String, usize> = records.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();
        if pos.len() != records.len() {
            return Err(HvdError::Data(format!("{}: duplicate record ids", p.display())));
        }
        if self.embeddings_path().exists() {
            for e in SidecarReader::new(BufReader::new(File::open(self.embeddings_path())?))? {
                let (id, v) = e?;
                let i = *pos
                    .get(&id)
                    .ok_or_else(|| HvdError::Data(format!("embedding for unknown record {id:?}")))?;
                records[i].text_embedding = Some(v);
            }
        }
        if self.hashtags_path().exists() {
            for e in SidecarReader::new(BufReader::new(File::open(self.hashtags_path())?))? {
                let (id, v) = e?;
                let i = *pos
                    .get(&id)
                    .ok_or_else(|| HvdError::Data(format!("hashtag embedding for unknown record {id:?}")))?;
                records[i].hashtag_embeddings.get_or_insert_with(Vec::new).push(v);
            }
            for r in &records {
                if let Some(h) = &r.hashtag_embeddings {
                    if h.len() != r.hashtags.len() {
                        return Err(HvdError::Data(format!("record {:?}: hashtag embeddings out of step", r.id)));
                    }
                }
            }
        }
        Ok(records)
    }

    /// Rewrites the record files.
    pub fn save_records<'a, I>(&self, records: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a Record> + Clone,
    {
        fs::create_dir_all(&self.dir)?;
        let dim = records
            .clone()
            .into_iter()
            .find_map(|r| {
                r.text_embedding
                    .as_ref()
                    .map(|e| e.len())
                    .or_else(|| r.hashtag_embeddings.as_ref().and_then(|h| h.first()).map(|e| e.len()))
            });
        write_atomic_with(&self.records_path(), |w| {
            for r in records.clone() {
                write_record(w, r, false)?;
            }
            Ok(())
        })?;
        match dim {
            None => {
                for p in [self.embeddings_path(), self.hashtags_path()] {
                    if p.exists() {
                        fs::remove_file(p)?;
                    }
                }
            }
            Some(dim) => {
                write_atomic_with(&self.embeddings_path(), |w| {
                    let mut s = SidecarWriter::new(w, dim)?;
                    for r in records.clone() {
                        if let Some(e) = &r.text_embedding {
                            s.write(&r.id, e)?;
                        }
                    }
                    s.finish()?;
                    Ok(())
                })?;
                write_atomic_with(&self.hashtags_path(), |w| {
                    let mut s = SidecarWriter::new(w, dim)?;
                    for r in records.clone() {
                        for e in r.hashtag_embeddings.iter().flatten() {
                            s.write(&r.id, e)?;
                        }
                    }
                    s.finish()?;
                    Ok(())
                })?;
            }
        }
        Ok(())
    }

    pub fn save_indices(&self, engine: &Engine) -> Result<()> {
        fs::create_dir_all(self.index_dir())?;
        for (a, idx) in engine.mv_indices() {
            write_atomic_with(&self.mv_index_path(*a), |w| write_index(w, idx, 0))?;
        }
        if let Some(idx) = engine.sv_index() {
            write_atomic_with(&self.sv_index_path(), |w| write_index(w, idx, FLAG_SINGLE_VECTOR))?;
        }
        Ok(())
    }

    /// Writes config, records and indices of `engine`.
    pub fn save_engine(&self, engine: &Engine) -> Result<()> {
        self.save_records(engine.records())?;
        self.save_indices(engine)?;
        engine.config().save(&self.config_path())
    }

    /// Loads an indexed store. Indices are read from disk, not re-encoded.
    pub fn load_engine(&self) -> Result<Engine> {
        let config = self
            .load_config()?
            .ok_or_else(|| HvdError::NotFound(format!("{} has no encoder configuration; run `index` first", self.dir.display())))?;
        let records = self.load_records()?;
        let mut mv = BTreeMap::new();
        if config.modes.contains(&Mode::Mv) {
            for a in config.attributes()? {
                let p = self.mv_index_path(a);
                let (idx, flags) = read_index(BufReader::new(File::open(&p).map_err(|e| {
                    HvdError::Mismatch(format!("{}: {e}", p.display()))
                })?))?;
                if flags & FLAG_SINGLE_VECTOR != 0 || idx.label() != a.name() {
                    return Err(HvdError::Mismatch(format!("{} is not the {a} index", p.display())));
                }
                mv.insert(a, idx);
            }
        }
        let sv = if config.modes.contains(&Mode::Sv) {
            let p = self.sv_index_path();
            let (idx, flags) = read_index(BufReader::new(
                File::open(&p).map_err(|e| HvdError::Mismatch(format!("{}: {e}", p.display())))?,
            ))?;
            if flags & FLAG_SINGLE_VECTOR == 0 {
                return Err(HvdError::Mismatch(format!("{} is not a single-vector index", p.display())));
            }
            Some(idx)
        } else {
            None
        };
        Engine::from_parts(config, records, mv, sv)
    }
}

//! JSON-lines record reader and writer.

use std::io::{BufRead, Write};

use hvd_core::Record;
use serde::{Deserialize, Serialize};

use crate::timefmt;
use crate::Result;

/// Wire form of a record. Every field is optional at the serde level so that
/// missing required fields are reported by name rather than as a parse error.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_embedding: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hashtag_embeddings: Option<Vec<Vec<f32>>>,
}

impl RecordJson {
    pub fn from_record(r: &Record, with_embeddings: bool) -> Self {
        Self {
            id: Some(r.id.clone()),
            text: Some(r.text.clone()),
            hashtags: r.hashtags.clone(),
            language: r.language.clone(),
            location: r.location.clone(),
            sentiment: r.sentiment.map(|s| s.to_vec()),
            created_at: Some(timefmt::format(r.created_at)),
            text_embedding: if with_embeddings { r.text_embedding.clone() } else { None },
            hashtag_embeddings: if with_embeddings { r.hashtag_embeddings.clone() } else { None },
        }
    }

    /// Validates required fields and shapes.
    pub fn into_record(self) -> std::result::Result<Record, String> {
        let id = self.id.ok_or("missing required field \"id\"")?;
        if id.is_empty() {
            return Err("empty \"id\"".into());
        }
        let text = self.text.ok_or("missing required field \"text\"")?;
        let created_at = self.created_at.ok_or("missing required field \"created_at\"")?;
        let created_at = timefmt::parse(&created_at).map_err(|e| e.to_string())?;
        let sentiment = match self.sentiment {
            None => None,
            Some(v) => {
                let arr: [f64; 3] = v
                    .as_slice()
                    .try_into()
                    .map_err(|_| format!("\"sentiment\" must have 3 entries, found {}", v.len()))?;
                Some(arr)
            }
        };
        if let Some(h) = &self.hashtag_embeddings {
            if h.len() != self.hashtags.len() {
                return Err(format!(
                    "{} hashtag embeddings for {} hashtags",
                    h.len(),
                    self.hashtags.len()
                ));
            }
        }
        Ok(Record {
            id,
            text,
            hashtags: self.hashtags,
            language: self.language,
            location: self.location,
            sentiment,
            created_at,
            text_embedding: self.text_embedding,
            hashtag_embeddings: self.hashtag_embeddings,
        })
    }
}

/// A rejected input line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LineError {
    /// 1-based.
    pub line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub reason: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

/// Streams records one line at a time; blank lines are skipped. A bad line
/// yields an `Err` item and reading continues.
pub struct RecordReader<R> {
    input: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(input: R) -> Self {
        Self {
            input,
            line: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    /// Outer error: IO failure (stream ends). Inner: a rejected line.
    type Item = Result<std::result::Result<(usize, Record), LineError>>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.input.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            let line = self.buf.trim();
            if line.is_empty() {
                continue;
            }
            let parsed = serde_json::from_str::<RecordJson>(line);
            return Some(Ok(match parsed {
                Err(e) => Err(LineError {
                    line: self.line,
                    id: None,
                    reason: format!("malformed JSON: {e}"),
                }),
                Ok(j) => {
                    let id = j.id.clone();
                    j.into_record()
                        .map(|r| (self.line, r))
                        .map_err(|reason| LineError {
                            line: self.line,
                            id,
                            reason,
                        })
                }
            }));
        }
    }
}

pub fn write_record<W: Write>(w: &mut W, r: &Record, with_embeddings: bool) -> Result<()> {
    serde_json::to_writer(&mut *w, &RecordJson::from_record(r, with_embeddings))?;
    w.write_all(b"\n")?;
    Ok(())
}

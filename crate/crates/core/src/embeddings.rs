//! Precomputed embedding vectors, read from a JSON-lines sidecar.
//!
//! Keys are `<doc_id>/<mention_id>` for action mentions,
//! `<doc_id>/sent/<i>` for sentences and `kb/<kb_id>` for linked entities.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VectorStoreError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("vector `{key}` has dimension {got}, expected {expected}")]
    Dimension {
        key: String,
        got: usize,
        expected: usize,
    },
}

#[derive(Serialize, Deserialize)]
struct Record {
    key: String,
    vector: Vec<f32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VectorStore {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

pub fn mention_key(doc_id: &str, mention_id: &str) -> String {
    format!("{doc_id}/{mention_id}")
}

pub fn sentence_key(doc_id: &str, sentence: usize) -> String {
    format!("{doc_id}/sent/{sentence}")
}

pub fn kb_key(kb_id: &str) -> String {
    format!("kb/{kb_id}")
}

impl VectorStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VectorStoreError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| VectorStoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_jsonl(&text)
    }

    pub fn from_jsonl(text: &str) -> Result<Self, VectorStoreError> {
        let mut store = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(line).map_err(|e| VectorStoreError::Format {
                line: i + 1,
                message: e.to_string(),
            })?;
            store.insert(rec.key, rec.vector)?;
        }
        Ok(store)
    }

    /// Records sorted by key.
    pub fn to_jsonl(&self) -> String {
        let mut keys: Vec<&String> = self.vectors.keys().collect();
        keys.sort();
        let mut out = String::new();
        for k in keys {
            let rec = Record {
                key: k.clone(),
                vector: self.vectors[k].clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn insert(&mut self, key: String, vector: Vec<f32>) -> Result<(), VectorStoreError> {
        if self.vectors.is_empty() {
            self.dim = vector.len();
        } else if vector.len() != self.dim {
            return Err(VectorStoreError::Dimension {
                key,
                got: vector.len(),
                expected: self.dim,
            });
        }
        self.vectors.insert(key, vector);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&[f32]> {
        self.vectors.get(key).map(Vec::as_slice)
    }

    pub fn remove(&mut self, key: &str) -> Option<Vec<f32>> {
        self.vectors.remove(key)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Prefixes document-scoped keys with a corpus id, mirroring
    /// [`crate::corpus::merge_corpora`]. Entity keys are shared.
    pub fn namespaced(&self, corpus_id: &str) -> Self {
        let vectors = self
            .vectors
            .iter()
            .map(|(k, v)| {
                let k = if k.starts_with("kb/") {
                    k.clone()
                } else {
                    format!("{corpus_id}/{k}")
                };
                (k, v.clone())
            })
            .collect();
        Self {
            dim: self.dim,
            vectors,
        }
    }

    /// Union of stores; all must share one dimension.
    pub fn merge(stores: &[VectorStore]) -> Result<Self, VectorStoreError> {
        let mut out = Self::new();
        for s in stores {
            let mut keys: Vec<&String> = s.vectors.keys().collect();
            keys.sort();
            for k in keys {
                out.insert(k.clone(), s.vectors[k].clone())?;
            }
        }
        Ok(out)
    }
}

/// Cosine similarity clamped to `[0, 1]`; `None` for zero vectors.
pub fn cosine(a: &[f32], b: &[f32]) -> Option<f64> {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0))
}

//! Sentence embeddings: the line-delimited embedding file and the HTTP
//! embedding-provider client.
//!
//! The embedding file starts with a header `{"dim": .., "model_id": ..}`
//! followed by one `{"id": .., "values": [..]}` row per vector.

mod provider;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{preprocess_text, Dataset};

pub use provider::{EmbeddingProviderClient, ProviderError, ProviderResponse, DEFAULT_BATCH_SIZE};

/// Width produced by the reference multilingual encoder.
pub const DEFAULT_DIM: usize = 768;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("embedding file is missing its header line")]
    MissingHeader,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("vector `{id}` has {got} values, expected {expected}")]
    Dimension { id: String, expected: usize, got: usize },
    #[error("vector `{id}` has a non-finite value at position {index}")]
    NonFinite { id: String, index: usize },
    #[error("duplicate embedding id `{0}`")]
    DuplicateId(String),
    #[error("declared dimension must be positive")]
    ZeroDim,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingHeader {
    pub dim: usize,
    pub model_id: String,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingRow<'a> {
    #[serde(borrow)]
    id: std::borrow::Cow<'a, str>,
    values: std::borrow::Cow<'a, [f64]>,
}

/// Validated id to vector map. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    model_id: String,
    vectors: BTreeMap<String, Vec<f64>>,
}

/// Lookup key for a raw tweet text: digest of its preprocessed form.
pub fn text_key(text: &str) -> String {
    crate::fingerprint::digest_bytes(preprocess_text(text).as_bytes())
}

impl EmbeddingStore {
    pub fn new(dim: usize, model_id: impl Into<String>) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::ZeroDim);
        }
        Ok(EmbeddingStore { dim, model_id: model_id.into(), vectors: BTreeMap::new() })
    }

    /// Add a vector after checking width, finiteness and id uniqueness.
    pub fn insert(&mut self, id: impl Into<String>, values: Vec<f64>) -> Result<(), EmbeddingError> {
        let id = id.into();
        if values.len() != self.dim {
            return Err(EmbeddingError::Dimension { id, expected: self.dim, got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite { id, index });
        }
        if self.vectors.contains_key(&id) {
            return Err(EmbeddingError::DuplicateId(id));
        }
        self.vectors.insert(id, values);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vectors.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn header(&self) -> EmbeddingHeader {
        EmbeddingHeader { dim: self.dim, model_id: self.model_id.clone() }
    }

    /// File contents; floats use shortest round-trip formatting.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header()).expect("header serializes");
        out.push('\n');
        for (id, values) in &self.vectors {
            let row = EmbeddingRow { id: id.as_str().into(), values: values.as_slice().into() };
            let _ = writeln!(out, "{}", serde_json::to_string(&row).expect("row serializes"));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
        let path = path.as_ref();
        fs::write(path, self.to_jsonl())
            .map_err(|source| EmbeddingError::Io { path: path.display().to_string(), source })
    }

    pub fn digest(&self) -> String {
        crate::fingerprint::digest_bytes(self.to_jsonl().as_bytes())
    }

    /// Copy that also answers [`text_key`] lookups for every record of `ds`
    /// with a stored vector. Records sharing a text keep the first vector.
    pub fn with_text_keys(&self, ds: &Dataset) -> EmbeddingStore {
        let mut out = self.clone();
        for rec in ds.records() {
            if let Some(v) = self.vectors.get(&rec.id) {
                out.vectors.entry(text_key(&rec.text)).or_insert_with(|| v.clone());
            }
        }
        out
    }
}

pub fn parse_embeddings(text: &str) -> Result<EmbeddingStore, EmbeddingError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(EmbeddingError::MissingHeader)?;
    let header: EmbeddingHeader = serde_json::from_str(header)
        .map_err(|e| EmbeddingError::Parse { line: hline + 1, message: format!("bad header: {e}") })?;
    let mut store = EmbeddingStore::new(header.dim, header.model_id)?;
    for (i, line) in lines {
        let row: EmbeddingRow =
            serde_json::from_str(line).map_err(|e| EmbeddingError::Parse { line: i + 1, message: e.to_string() })?;
        store.insert(row.id.into_owned(), row.values.into_owned())?;
    }
    Ok(store)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore, EmbeddingError> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|source| EmbeddingError::Io { path: path.display().to_string(), source })?;
    parse_embeddings(&text)
}

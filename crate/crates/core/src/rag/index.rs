use std::collections::HashSet;
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use super::embed::{dot, Embedder};
use super::RagError;

/// Unit-norm tolerance for stored and query vectors.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocChunk {
    pub id: u64,
    pub label: String,
    pub source_title: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub id: u64,
    pub label: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub chunk: DocChunk,
    pub vector: Vec<f64>,
}

/// Chunks with their embeddings, queried by exhaustive cosine scan.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    embedder_tag: String,
    dim: usize,
    entries: Vec<IndexEntry>,
    labels: HashSet<String>,
    ids: HashSet<u64>,
}

fn is_unit(v: &[f64]) -> bool {
    (dot(v, v).sqrt() - 1.0).abs() <= NORM_TOLERANCE
}

impl VectorIndex {
    pub fn new(embedder_tag: impl Into<String>, dim: usize) -> Self {
        Self {
            embedder_tag: embedder_tag.into(),
            dim,
            entries: Vec::new(),
            labels: HashSet::new(),
            ids: HashSet::new(),
        }
    }

    pub fn for_embedder(embedder: &dyn Embedder) -> Self {
        Self::new(embedder.tag(), embedder.dim())
    }

    pub fn embedder_tag(&self) -> &str {
        &self.embedder_tag
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn chunk(&self, id: u64) -> Option<&DocChunk> {
        self.entries.iter().map(|e| &e.chunk).find(|c| c.id == id)
    }

    pub fn chunk_by_label(&self, label: &str) -> Option<&DocChunk> {
        self.entries.iter().map(|e| &e.chunk).find(|c| c.label == label)
    }

    /// Adds a chunk with a precomputed vector.
    pub fn insert(&mut self, chunk: DocChunk, vector: Vec<f64>) -> Result<(), RagError> {
        if chunk.text.trim().is_empty() {
            return Err(RagError::EmptyText);
        }
        if vector.len() != self.dim {
            return Err(RagError::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if !is_unit(&vector) {
            return Err(RagError::NotNormalised(chunk.label));
        }
        if self.labels.contains(&chunk.label) {
            return Err(RagError::DuplicateLabel(chunk.label));
        }
        if !self.ids.insert(chunk.id) {
            return Err(RagError::DuplicateId(chunk.id));
        }
        self.labels.insert(chunk.label.clone());
        self.entries.push(IndexEntry { chunk, vector });
        Ok(())
    }

    /// Embeds and adds a chunk.
    pub fn add(&mut self, chunk: DocChunk, embedder: &dyn Embedder) -> Result<(), RagError> {
        self.check_embedder(embedder)?;
        let v = embedder.embed(&chunk.text)?;
        self.insert(chunk, v)
    }

    fn check_embedder(&self, embedder: &dyn Embedder) -> Result<(), RagError> {
        if embedder.tag() != self.embedder_tag {
            return Err(RagError::EmbedderMismatch {
                index: self.embedder_tag.clone(),
                query: embedder.tag().to_string(),
            });
        }
        Ok(())
    }

    /// Top `k` entries by cosine with `query`, score descending, ties by
    /// ascending id.
    pub fn query_vector(&self, query: &[f64], k: usize) -> Result<Vec<RetrievalHit>, RagError> {
        if self.entries.is_empty() {
            return Err(RagError::EmptyIndex);
        }
        if query.len() != self.dim {
            return Err(RagError::DimensionMismatch {
                expected: self.dim,
                actual: query.len(),
            });
        }
        let mut scored: Vec<(f64, &DocChunk)> = self
            .entries
            .iter()
            .map(|e| (dot(query, &e.vector), &e.chunk))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.id.cmp(&b.1.id)));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(score, c)| RetrievalHit {
                id: c.id,
                label: c.label.clone(),
                score,
            })
            .collect())
    }

    pub fn query(
        &self,
        question: &str,
        k: usize,
        embedder: &dyn Embedder,
    ) -> Result<Vec<RetrievalHit>, RagError> {
        self.check_embedder(embedder)?;
        if self.entries.is_empty() {
            return Err(RagError::EmptyIndex);
        }
        let q = embedder.embed(question)?;
        self.query_vector(&q, k)
    }
}

/// An index behind a reader/writer lock: any number of concurrent queries
/// or a single writer.
#[derive(Debug, Clone)]
pub struct SharedIndex(Arc<RwLock<VectorIndex>>);

impl SharedIndex {
    pub fn new(index: VectorIndex) -> Self {
        Self(Arc::new(RwLock::new(index)))
    }

    pub fn query(
        &self,
        question: &str,
        k: usize,
        embedder: &dyn Embedder,
    ) -> Result<Vec<RetrievalHit>, RagError> {
        self.0.read().query(question, k, embedder)
    }

    pub fn add(&self, chunk: DocChunk, embedder: &dyn Embedder) -> Result<(), RagError> {
        self.0.write().add(chunk, embedder)
    }

    pub fn read(&self) -> parking_lot::RwLockReadGuard<'_, VectorIndex> {
        self.0.read()
    }
}

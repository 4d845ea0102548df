//! Policy-document retrieval: chunking, embedding, an exact cosine index and
//! its file format.

mod chunk;
mod corpus;
mod embed;
mod index;
mod store;

pub use chunk::{chunk_document, ChunkSpec};
pub use corpus::{
    build_index, default_corpus, default_index, load_corpus, write_default_corpus, Document,
    MANIFEST_FILE,
};
pub use embed::{dot, l2_normalise, tokenize, Embedder, HashingEmbedder, HttpEmbedder, EMBEDDING_DIM};
pub use index::{DocChunk, IndexEntry, RetrievalHit, SharedIndex, VectorIndex, NORM_TOLERANCE};
pub use store::{index_from_bytes, index_to_bytes, load_index, save_index, INDEX_MAGIC, INDEX_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum RagError {
    #[error("document is empty")]
    EmptyDocument,
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("invalid chunking: max_chars {max_chars} must exceed overlap {overlap}")]
    InvalidChunkSpec { max_chars: usize, overlap: usize },
    #[error("index was built with embedder `{index}` but the query uses `{query}`")]
    EmbedderMismatch { index: String, query: String },
    #[error("index is empty")]
    EmptyIndex,
    #[error("vector has {actual} dimensions, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("vector for `{0}` is not unit length")]
    NotNormalised(String),
    #[error("duplicate chunk label `{0}`")]
    DuplicateLabel(String),
    #[error("duplicate chunk id {0}")]
    DuplicateId(u64),
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error("corpus manifest: {0}")]
    Manifest(String),
    #[error("embedder endpoint: {0}")]
    Embedder(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

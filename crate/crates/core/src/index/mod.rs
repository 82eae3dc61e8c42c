//! Sign-quantized HNSW candidate search with cosine, citation-weighted or
//! cross-encoder reranking, metadata filters and a checksummed on-disk
//! format.

mod binary;
mod filter;
mod hnsw;
mod meta;
mod scoring;
mod search;
mod store;

use thiserror::Error;

pub use binary::{hamming, quantize, quantize_checked, BinaryCode};
pub use filter::SearchFilters;
pub use hnsw::{CodeStore, Hnsw, HnswParams};
pub use meta::{EntryMeta, PaperMeta, PaperSource};
pub use scoring::{candidate_pool_size, composite_score, cosine, MAX_POOL, MIN_POOL, RERANK_DEPTH};
pub use search::{IndexEntry, Rerank, ScoredHit, SearchOptions, SearchOutcome, VectorIndex};
pub use store::{
    Manifest, CODES_FILE, FORMAT_VERSION, GRAPH_FILE, MANIFEST_FILE, META_FILE, VECTORS_FILE,
};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("record {0} is already indexed")]
    DuplicateId(String),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("vector contains a non-finite value")]
    NonFiniteValue,
    #[error("k must be at least 1, got {0}")]
    InvalidK(usize),
    #[error("invalid index parameters: {0}")]
    InvalidParams(String),
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checksum mismatch in {file}")]
    ChecksumMismatch { file: String },
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: String, found: String },
    #[error("corrupt index: {0}")]
    Corrupt(String),
}

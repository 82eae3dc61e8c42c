//! Core of a semantic search engine for theorem statements.
//!
//! - [`extract`]: pull theorem, lemma, proposition and corollary records out of
//!   LaTeX and wikitext sources.
//! - [`enrich`]: slogan prompts, task instructions and model provider clients
//!   (with deterministic offline mocks).
//! - [`index`]: sign-quantized HNSW over Hamming distance, metadata filters,
//!   cosine / citation-weighted reranking and on-disk persistence.
//! - [`eval`]: Precision@k, Hit@k and MRR@k at theorem and paper level.

pub mod enrich;
pub mod eval;
pub mod extract;
pub mod index;

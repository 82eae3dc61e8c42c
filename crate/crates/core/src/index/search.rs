use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::binary::{quantize_checked, words_for, BinaryCode};
use super::filter::SearchFilters;
use super::hnsw::{CodeStore, Hnsw, HnswParams};
use super::meta::EntryMeta;
use super::scoring::{candidate_pool_size, composite_score, dot, norm, RERANK_DEPTH};
use super::IndexError;
use crate::enrich::RerankProvider;

/// A vector and its stored metadata, ready for insertion.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub vector: Vec<f32>,
    pub meta: EntryMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHit {
    pub record_id: String,
    pub cosine: f64,
    pub composite: f64,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerank_score: Option<f64>,
}

/// Cross-encoder stage: the provider and the raw query text it scores
/// candidate slogans against.
#[derive(Clone, Copy)]
pub struct Rerank<'a> {
    pub provider: &'a dyn RerankProvider,
    pub query_text: &'a str,
}

#[derive(Clone, Copy, Default)]
pub struct SearchOptions<'a> {
    pub filters: Option<&'a SearchFilters>,
    /// Citation weight; ignored when a reranker is given.
    pub lambda: f64,
    pub rerank: Option<Rerank<'a>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub hits: Vec<ScoredHit>,
    /// The cross-encoder ordered the hits.
    pub reranked: bool,
    /// Set when the reranker failed and cosine order was used instead.
    pub rerank_error: Option<String>,
    pub pool_size: usize,
    /// Candidates left after metadata filtering.
    pub filtered_pool: usize,
}

/// In-memory index: full vectors for cosine scoring, sign codes for the
/// graph, and per-entry metadata. Nodes are numbered in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    pub(crate) dimension: usize,
    pub(crate) vectors: Vec<f32>,
    pub(crate) norms: Vec<f64>,
    pub(crate) codes: CodeStore,
    pub(crate) metas: Vec<EntryMeta>,
    pub(crate) ids: HashMap<String, u32>,
    pub(crate) graph: Hnsw,
}

/// Descending score, then ascending record id.
fn by_score_then_id(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

impl VectorIndex {
    pub fn new(dimension: usize, params: HnswParams) -> Result<Self, IndexError> {
        if dimension == 0 {
            return Err(IndexError::InvalidParams(
                "dimension must be positive".into(),
            ));
        }
        params.validate()?;
        Ok(Self {
            dimension,
            vectors: Vec::new(),
            norms: Vec::new(),
            codes: CodeStore::new(words_for(dimension)),
            metas: Vec::new(),
            ids: HashMap::new(),
            graph: Hnsw::new(params),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn params(&self) -> &HnswParams {
        self.graph.params()
    }

    pub fn len(&self) -> usize {
        self.metas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metas.is_empty()
    }

    pub fn contains(&self, record_id: &str) -> bool {
        self.ids.contains_key(record_id)
    }

    pub fn get(&self, record_id: &str) -> Option<&EntryMeta> {
        self.ids.get(record_id).map(|&n| &self.metas[n as usize])
    }

    pub fn vector(&self, record_id: &str) -> Option<&[f32]> {
        self.ids.get(record_id).map(|&n| self.node_vector(n))
    }

    pub fn code(&self, record_id: &str) -> Option<BinaryCode> {
        self.ids
            .get(record_id)
            .map(|&n| BinaryCode::from_words(self.dimension, self.codes.get(n).to_vec()))
    }

    pub fn entries(&self) -> impl Iterator<Item = &EntryMeta> {
        self.metas.iter()
    }

    pub fn graph(&self) -> &Hnsw {
        &self.graph
    }

    fn node_vector(&self, node: u32) -> &[f32] {
        let at = node as usize * self.dimension;
        &self.vectors[at..at + self.dimension]
    }

    fn check_vector(&self, vector: &[f32]) -> Result<f64, IndexError> {
        if vector.len() != self.dimension {
            return Err(IndexError::DimensionMismatch {
                expected: self.dimension,
                got: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(IndexError::NonFiniteValue);
        }
        let n = norm(vector);
        if n == 0.0 {
            return Err(IndexError::ZeroVector);
        }
        Ok(n)
    }

    pub fn insert(&mut self, entry: IndexEntry) -> Result<(), IndexError> {
        let record_id = entry.meta.record.record_id.clone();
        if self.ids.contains_key(&record_id) {
            return Err(IndexError::DuplicateId(record_id));
        }
        let n = self.check_vector(&entry.vector)?;
        let code = quantize_checked(&entry.vector, self.dimension)?;
        let node = self.metas.len() as u32;
        self.vectors.extend_from_slice(&entry.vector);
        self.norms.push(n);
        self.codes.push(code.words());
        self.metas.push(entry.meta);
        self.ids.insert(record_id, node);
        self.graph.insert(&self.codes);
        Ok(())
    }

    /// Up to `pool` record ids nearest to `query` in Hamming distance,
    /// ascending by distance then record id.
    pub fn ann_candidates(
        &self,
        query: &BinaryCode,
        pool: usize,
    ) -> Result<Vec<String>, IndexError> {
        Ok(self
            .ann_nodes(query, pool)?
            .into_iter()
            .map(|(_, n)| self.metas[n as usize].record.record_id.clone())
            .collect())
    }

    /// Like [`Self::ann_candidates`], with distances and node numbers.
    pub(crate) fn ann_nodes(
        &self,
        query: &BinaryCode,
        pool: usize,
    ) -> Result<Vec<(u32, u32)>, IndexError> {
        if query.dim() != self.dimension {
            return Err(IndexError::DimensionMismatch {
                expected: self.dimension,
                got: query.dim(),
            });
        }
        if pool == 0 {
            return Err(IndexError::InvalidK(0));
        }
        let ef = pool.max(self.graph.params().ef_search);
        let mut found = self.graph.search(&self.codes, query.words(), ef);
        found.sort_by(|a, b| {
            a.0.cmp(&b.0).then_with(|| {
                self.metas[a.1 as usize]
                    .record
                    .record_id
                    .cmp(&self.metas[b.1 as usize].record.record_id)
            })
        });
        found.truncate(pool);
        Ok(found)
    }

    /// Candidate pool after filtering, scored by cosine and ordered by
    /// descending cosine then record id. This is the ordering the final
    /// ranking reproduces when citation weight is zero.
    pub fn filtered_pool(
        &self,
        query: &[f32],
        k: usize,
        filters: Option<&SearchFilters>,
    ) -> Result<Vec<(String, f64)>, IndexError> {
        let qn = self.check_vector(query)?;
        let pool = candidate_pool_size(k)?;
        let code = quantize_checked(query, self.dimension)?;
        let mut scored: Vec<(u32, f64)> = self
            .ann_nodes(&code, pool)?
            .into_iter()
            .filter(|&(_, n)| filters.is_none_or(|f| f.matches(&self.metas[n as usize])))
            .map(|(_, n)| {
                (
                    n,
                    dot(query, self.node_vector(n)) / (qn * self.norms[n as usize]),
                )
            })
            .collect();
        scored.sort_by(|a, b| by_score_then_id((a.1, self.id_of(a.0)), (b.1, self.id_of(b.0))));
        Ok(scored
            .into_iter()
            .map(|(n, c)| (self.id_of(n).to_string(), c))
            .collect())
    }

    fn id_of(&self, node: u32) -> &str {
        &self.metas[node as usize].record.record_id
    }

    /// Two-stage retrieval: Hamming candidate pool, metadata filter, then
    /// either citation-weighted cosine order or cross-encoder order over the
    /// top cosine candidates.
    pub fn search(
        &self,
        query: &[f32],
        k: usize,
        options: &SearchOptions<'_>,
    ) -> Result<SearchOutcome, IndexError> {
        let pool_size = candidate_pool_size(k)?;
        if let Some(f) = options.filters {
            f.validate().map_err(IndexError::InvalidFilter)?;
        }
        if !(options.lambda.is_finite() && options.lambda >= 0.0) {
            return Err(IndexError::InvalidParams(format!(
                "citation weight {} must be >= 0",
                options.lambda
            )));
        }
        if self.is_empty() {
            self.check_vector(query)?;
            return Ok(SearchOutcome {
                hits: Vec::new(),
                reranked: false,
                rerank_error: None,
                pool_size,
                filtered_pool: 0,
            });
        }
        let pool = self.filtered_pool(query, k, options.filters)?;
        let filtered_pool = pool.len();
        let lambda = if options.rerank.is_some() {
            0.0
        } else {
            options.lambda
        };
        let citations = |id: &str| self.get(id).map_or(0, EntryMeta::citations);

        let mut rerank_error = None;
        if let Some(rerank) = options.rerank {
            let head: Vec<&(String, f64)> = pool.iter().take(RERANK_DEPTH).collect();
            let slogans: Vec<String> = head
                .iter()
                .map(|(id, _)| self.get(id).map(|m| m.slogan.clone()).unwrap_or_default())
                .collect();
            match rerank.provider.score(rerank.query_text, &slogans) {
                Ok(scores)
                    if scores.len() == head.len() && scores.iter().all(|s| s.is_finite()) =>
                {
                    let mut rescored: Vec<(&(String, f64), f64)> = head
                        .into_iter()
                        .zip(scores.into_iter().map(f64::from))
                        .collect();
                    rescored.sort_by(|a, b| by_score_then_id((a.1, &a.0 .0), (b.1, &b.0 .0)));
                    let hits = rescored
                        .into_iter()
                        .take(k)
                        .enumerate()
                        .map(|(i, ((id, cos), score))| ScoredHit {
                            record_id: id.clone(),
                            cosine: *cos,
                            composite: *cos,
                            rank: i + 1,
                            rerank_score: Some(score),
                        })
                        .collect();
                    return Ok(SearchOutcome {
                        hits,
                        reranked: true,
                        rerank_error: None,
                        pool_size,
                        filtered_pool,
                    });
                }
                Ok(scores) => {
                    rerank_error = Some(format!(
                        "reranker returned {} usable scores for {} candidates",
                        scores.iter().filter(|s| s.is_finite()).count(),
                        head.len()
                    ));
                }
                Err(e) => rerank_error = Some(e.to_string()),
            }
            tracing::warn!(
                error = rerank_error.as_deref(),
                "reranking skipped, keeping cosine order"
            );
        }

        let mut scored: Vec<(String, f64, f64)> = pool
            .into_iter()
            .map(|(id, cos)| {
                let composite = composite_score(cos, citations(&id), lambda);
                (id, cos, composite)
            })
            .collect();
        if lambda != 0.0 {
            scored.sort_by(|a, b| by_score_then_id((a.2, &a.0), (b.2, &b.0)));
        }
        let hits = scored
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (record_id, cosine, composite))| ScoredHit {
                record_id,
                cosine,
                composite,
                rank: i + 1,
                rerank_score: None,
            })
            .collect();
        Ok(SearchOutcome {
            hits,
            reranked: false,
            rerank_error,
            pool_size,
            filtered_pool,
        })
    }
}

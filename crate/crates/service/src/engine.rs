//! Query-side orchestration shared by the HTTP API and the eval runner.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use thmdx_core::enrich::{
    apply_task_instruction, embed_text, EmbedProvider, EmbedProviderConfig, RerankProvider,
    RetryPolicy, Side,
};
use thmdx_core::extract::ThmType;
use thmdx_core::index::{
    EntryMeta, IndexError, PaperMeta, Rerank, SearchFilters, SearchOptions, VectorIndex,
};

use crate::config::ServiceConfig;
use crate::providers::Providers;
use crate::{ServiceError, API_VERSION};

/// Authors listed in the facets response.
pub const TOP_AUTHORS: usize = 50;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filters: Option<SearchFilters>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub use_reranker: Option<bool>,
}

impl SearchRequest {
    pub fn new(query: impl Into<String>) -> Self {
        Self {
            query: query.into(),
            ..Self::default()
        }
    }
}

/// Paper fields shown with each hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperSummary {
    pub title: String,
    pub authors: Vec<String>,
    pub url: String,
    pub tags: Vec<String>,
    pub year: i32,
    pub journal: Option<String>,
    pub citations: u64,
}

impl From<&PaperMeta> for PaperSummary {
    fn from(p: &PaperMeta) -> Self {
        Self {
            title: p.title.clone(),
            authors: p.authors.clone(),
            url: p.url.clone(),
            tags: p.tags.clone(),
            year: p.year,
            journal: p.journal.clone(),
            citations: p.citations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitPayload {
    pub record_id: String,
    pub doc_id: String,
    pub thm_type: ThmType,
    pub name: String,
    pub slogan: String,
    pub body: String,
    pub source_url: Option<String>,
    pub cosine: f64,
    pub composite: f64,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerank_score: Option<f64>,
    pub paper: Option<PaperSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub api_version: String,
    pub query: String,
    /// Effective k after defaulting and clamping.
    pub k: usize,
    pub hits: Vec<HitPayload>,
    pub took_ms: f64,
    pub reranked: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerank_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetCount {
    pub value: String,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearSpan {
    pub min: i32,
    pub max: i32,
}

/// Filter values present in the index, counted per record.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facets {
    pub total: usize,
    pub thm_types: Vec<FacetCount>,
    pub tags: Vec<FacetCount>,
    /// Most frequent authors, at most [`TOP_AUTHORS`].
    pub authors: Vec<FacetCount>,
    pub years: Option<YearSpan>,
    /// `published`, `preprint`, or `unknown` for records without paper metadata.
    pub publication: Vec<FacetCount>,
}

fn counted(map: BTreeMap<String, usize>) -> Vec<FacetCount> {
    map.into_iter()
        .map(|(value, count)| FacetCount { value, count })
        .collect()
}

impl Facets {
    pub fn compute<'a>(entries: impl Iterator<Item = &'a EntryMeta>) -> Self {
        let mut total = 0;
        let mut types = BTreeMap::new();
        let mut tags = BTreeMap::new();
        let mut authors: BTreeMap<String, usize> = BTreeMap::new();
        let mut publication = BTreeMap::new();
        let mut years: Option<YearSpan> = None;
        for entry in entries {
            total += 1;
            *types
                .entry(entry.record.thm_type.as_str().to_string())
                .or_insert(0) += 1;
            let status = match &entry.paper {
                None => "unknown",
                Some(p) if p.is_published() => "published",
                Some(_) => "preprint",
            };
            *publication.entry(status.to_string()).or_insert(0) += 1;
            let Some(paper) = &entry.paper else { continue };
            let mut paper_tags: Vec<&String> =
                paper.tags.iter().chain([&paper.primary_tag]).collect();
            paper_tags.sort();
            paper_tags.dedup();
            for tag in paper_tags {
                *tags.entry(tag.clone()).or_insert(0) += 1;
            }
            let mut names: Vec<&String> = paper.authors.iter().collect();
            names.sort();
            names.dedup();
            for a in names {
                *authors.entry(a.clone()).or_insert(0) += 1;
            }
            years = Some(match years {
                None => YearSpan {
                    min: paper.year,
                    max: paper.year,
                },
                Some(y) => YearSpan {
                    min: y.min.min(paper.year),
                    max: y.max.max(paper.year),
                },
            });
        }
        let mut authors = counted(authors);
        authors.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.value.cmp(&b.value)));
        authors.truncate(TOP_AUTHORS);
        Self {
            total,
            thm_types: counted(types),
            tags: counted(tags),
            authors,
            years,
            publication: counted(publication),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    /// The request itself is invalid.
    #[error("{0}")]
    BadRequest(String),
    /// The embedding provider failed.
    #[error("{0}")]
    Upstream(String),
    #[error("{0}")]
    Internal(String),
}

/// A loaded index plus the providers needed to answer queries. Immutable
/// once built; shared across request handlers.
pub struct SearchEngine {
    index: VectorIndex,
    embed: Arc<dyn EmbedProvider>,
    embed_config: EmbedProviderConfig,
    rerank: Option<Arc<dyn RerankProvider>>,
    default_k: usize,
    max_k: usize,
    facets: Facets,
}

impl SearchEngine {
    pub fn new(
        index: VectorIndex,
        embed: Arc<dyn EmbedProvider>,
        embed_config: EmbedProviderConfig,
        rerank: Option<Arc<dyn RerankProvider>>,
        default_k: usize,
        max_k: usize,
    ) -> Result<Self, ServiceError> {
        if index.dimension() != embed_config.dimension {
            return Err(IndexError::VersionMismatch {
                expected: format!("dimension {}", index.dimension()),
                found: format!("dimension {}", embed_config.dimension),
            }
            .into());
        }
        if default_k == 0 || default_k > max_k {
            return Err(ServiceError::Config(format!(
                "need 1 <= default_k <= max_k, got {default_k}/{max_k}"
            )));
        }
        let facets = Facets::compute(index.entries());
        Ok(Self {
            index,
            embed,
            embed_config,
            rerank,
            default_k,
            max_k,
            facets,
        })
    }

    /// Load the configured index directory.
    pub fn open(config: &ServiceConfig, providers: &Providers) -> Result<Self, ServiceError> {
        let index = VectorIndex::load(&config.index_path)?;
        Self::new(
            index,
            providers.embed.clone(),
            config.embed_provider.provider_config(),
            providers.rerank.clone(),
            config.default_k,
            config.max_k,
        )
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    pub fn facets(&self) -> &Facets {
        &self.facets
    }

    pub fn max_k(&self) -> usize {
        self.max_k
    }

    pub fn has_reranker(&self) -> bool {
        self.rerank.is_some()
    }

    pub fn get(&self, record_id: &str) -> Option<&EntryMeta> {
        self.index.get(record_id)
    }

    /// Instruction-prefixed query embedding.
    pub fn embed_query(&self, query: &str) -> Result<Vec<f32>, SearchError> {
        let text = apply_task_instruction(query, Side::Query, self.embed_config.instruction_mode);
        embed_text(
            self.embed.as_ref(),
            &self.embed_config,
            RetryPolicy::default(),
            &text,
        )
        .map_err(|e| SearchError::Upstream(format!("query embedding failed: {e}")))
    }

    pub fn search(&self, request: &SearchRequest) -> Result<SearchResponse, SearchError> {
        let started = Instant::now();
        let query = request.query.trim();
        if query.is_empty() {
            return Err(SearchError::BadRequest("query must not be empty".into()));
        }
        let mut warnings = Vec::new();
        let k = match request.k {
            None => self.default_k,
            Some(0) => return Err(SearchError::BadRequest("k must be at least 1".into())),
            Some(k) if k > self.max_k => {
                warnings.push(format!("k={k} exceeds max_k; clamped to {}", self.max_k));
                self.max_k
            }
            Some(k) => k,
        };
        let lambda = request.citation_weight.unwrap_or(0.0);
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(SearchError::BadRequest(format!(
                "citation_weight must be >= 0, got {lambda}"
            )));
        }
        if let Some(f) = &request.filters {
            f.validate().map_err(SearchError::BadRequest)?;
        }
        let use_reranker = request.use_reranker.unwrap_or(false);
        let rerank = match (&self.rerank, use_reranker) {
            (_, false) => None,
            (None, true) => {
                return Err(SearchError::BadRequest("no reranker is configured".into()))
            }
            (Some(p), true) => {
                if lambda > 0.0 {
                    warnings.push("citation_weight is ignored when use_reranker is set".into());
                }
                Some(Rerank {
                    provider: p.as_ref(),
                    query_text: query,
                })
            }
        };

        let vector = self.embed_query(query)?;
        let options = SearchOptions {
            filters: request.filters.as_ref(),
            lambda,
            rerank,
        };
        let outcome = self
            .index
            .search(&vector, k, &options)
            .map_err(|e| match e {
                IndexError::InvalidFilter(m) | IndexError::InvalidParams(m) => {
                    SearchError::BadRequest(m)
                }
                other => SearchError::Internal(other.to_string()),
            })?;
        let hits = outcome
            .hits
            .into_iter()
            .map(|h| {
                let meta = self
                    .index
                    .get(&h.record_id)
                    .expect("hit ids come from the index");
                HitPayload {
                    record_id: h.record_id,
                    doc_id: meta.record.doc_id.clone(),
                    thm_type: meta.record.thm_type,
                    name: meta.record.name.clone(),
                    slogan: meta.slogan.clone(),
                    body: meta.record.body.clone(),
                    source_url: meta.record.source_url.clone(),
                    cosine: h.cosine,
                    composite: h.composite,
                    rank: h.rank,
                    rerank_score: h.rerank_score,
                    paper: meta.paper.as_ref().map(PaperSummary::from),
                }
            })
            .collect();
        Ok(SearchResponse {
            api_version: API_VERSION.to_string(),
            query: query.to_string(),
            k,
            hits,
            took_ms: started.elapsed().as_secs_f64() * 1e3,
            reranked: outcome.reranked,
            rerank_error: outcome.rerank_error,
            warning: (!warnings.is_empty()).then(|| warnings.join("; ")),
        })
    }
}

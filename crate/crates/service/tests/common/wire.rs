use serde::Deserialize;
use serde_json::Value;

// Mirrors of the documented wire shapes. Unknown fields are errors, so a
// field added or renamed on the server fails these tests.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WirePaper {
    pub title: String,
    pub authors: Vec<String>,
    pub url: String,
    pub tags: Vec<String>,
    pub year: i32,
    pub journal: Option<String>,
    pub citations: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireHit {
    pub record_id: String,
    pub doc_id: String,
    pub thm_type: String,
    pub name: String,
    pub slogan: String,
    pub body: String,
    pub source_url: Option<String>,
    pub cosine: f64,
    pub composite: f64,
    pub rank: usize,
    #[serde(default)]
    pub rerank_score: Option<f64>,
    pub paper: Option<WirePaper>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSearch {
    pub api_version: String,
    pub query: String,
    pub k: usize,
    pub hits: Vec<WireHit>,
    pub took_ms: f64,
    pub reranked: bool,
    #[serde(default)]
    pub rerank_error: Option<String>,
    #[serde(default)]
    pub warning: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireError {
    pub api_version: String,
    pub error: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireCount {
    pub value: String,
    pub count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireYears {
    pub min: i32,
    pub max: i32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireFacets {
    pub api_version: String,
    pub total: usize,
    pub thm_types: Vec<WireCount>,
    pub tags: Vec<WireCount>,
    pub authors: Vec<WireCount>,
    pub years: Option<WireYears>,
    pub publication: Vec<WireCount>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireEvent {
    pub timestamp: String,
    pub query_text: String,
    pub record_id: String,
    pub verdict: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireFeedback {
    pub api_version: String,
    pub accepted: WireEvent,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireHealth {
    pub api_version: String,
    pub status: String,
    pub count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireTheorem {
    pub api_version: String,
    pub record_id: String,
    pub doc_id: String,
    pub thm_type: String,
    pub ref_number: Option<String>,
    pub note: Option<String>,
    pub label: Option<String>,
    pub body: String,
    pub name: String,
    pub source_url: Option<String>,
    pub numbered_by: String,
    pub slogan: String,
    pub paper: Option<Value>,
}

/// Independent statement of the filter semantics over the wire hit.
pub fn satisfies(filters: &Value, hit: &WireHit) -> bool {
    if let Some(types) = filters.get("thm_types").and_then(Value::as_array) {
        if !types.is_empty() && !types.iter().any(|t| t == hit.thm_type.as_str()) {
            return false;
        }
    }
    if let Some(doc) = filters.get("doc_id").and_then(Value::as_str) {
        if !doc.is_empty() && hit.doc_id != doc {
            return false;
        }
    }
    let paper = hit.paper.as_ref();
    if let Some(authors) = filters
        .get("authors")
        .and_then(Value::as_array)
        .filter(|a| !a.is_empty())
    {
        if !paper.is_some_and(|p| {
            p.authors
                .iter()
                .any(|a| authors.iter().any(|x| x == a.as_str()))
        }) {
            return false;
        }
    }
    if let Some(tags) = filters
        .get("tags")
        .and_then(Value::as_array)
        .filter(|a| !a.is_empty())
    {
        if !paper.is_some_and(|p| p.tags.iter().any(|t| tags.iter().any(|x| x == t.as_str()))) {
            return false;
        }
    }
    if let Some(range) = filters.get("year_range").and_then(Value::as_array) {
        let (lo, hi) = (
            range[0].as_i64().unwrap() as i32,
            range[1].as_i64().unwrap() as i32,
        );
        if !paper.is_some_and(|p| lo <= p.year && p.year <= hi) {
            return false;
        }
    }
    if filters.get("published_only") == Some(&Value::Bool(true))
        && !paper.is_some_and(|p| p.journal.as_deref().is_some_and(|j| !j.trim().is_empty()))
    {
        return false;
    }
    true
}

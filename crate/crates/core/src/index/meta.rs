use serde::{Deserialize, Serialize};

use crate::extract::TheoremRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaperSource {
    Arxiv,
    Proofwiki,
    Other,
}

/// Document-level metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperMeta {
    pub doc_id: String,
    pub title: String,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    pub primary_tag: String,
    #[serde(default)]
    pub tags: Vec<String>,
    pub year: i32,
    #[serde(default)]
    pub journal: Option<String>,
    #[serde(default)]
    pub citations: u64,
    pub source: PaperSource,
    pub url: String,
}

impl PaperMeta {
    /// `primary_tag` must appear in `tags`.
    pub fn validate(&self) -> Result<(), String> {
        if self.doc_id.is_empty() {
            return Err("empty doc_id".into());
        }
        if !self.tags.iter().any(|t| t == &self.primary_tag) {
            return Err(format!(
                "{}: primary tag {:?} not among tags",
                self.doc_id, self.primary_tag
            ));
        }
        Ok(())
    }

    pub fn is_published(&self) -> bool {
        self.journal
            .as_deref()
            .is_some_and(|j| !j.trim().is_empty())
    }
}

/// Everything stored next to a vector: the record, its slogan and the
/// metadata of its source document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryMeta {
    #[serde(flatten)]
    pub record: TheoremRecord,
    pub slogan: String,
    #[serde(default)]
    pub paper: Option<PaperMeta>,
}

impl EntryMeta {
    pub fn citations(&self) -> u64 {
        self.paper.as_ref().map_or(0, |p| p.citations)
    }
}

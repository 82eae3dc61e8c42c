use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::meta::EntryMeta;
use crate::extract::ThmType;

/// Metadata restrictions. Absent or empty fields do not restrict. Author
/// and tag sets match if any element matches. Entries without document
/// metadata fail every paper-level restriction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchFilters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thm_types: Option<BTreeSet<ThmType>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub authors: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year_range: Option<(i32, i32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_only: Option<bool>,
}

fn active<T>(set: &Option<BTreeSet<T>>) -> Option<&BTreeSet<T>> {
    set.as_ref().filter(|s| !s.is_empty())
}

impl SearchFilters {
    pub fn is_empty(&self) -> bool {
        active(&self.thm_types).is_none()
            && active(&self.authors).is_none()
            && active(&self.tags).is_none()
            && self.doc_id.as_deref().is_none_or(str::is_empty)
            && self.year_range.is_none()
            && self.published_only != Some(true)
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.year_range {
            Some((lo, hi)) if lo > hi => Err(format!("year_range [{lo}, {hi}] is empty")),
            _ => Ok(()),
        }
    }

    pub fn matches(&self, entry: &EntryMeta) -> bool {
        if let Some(types) = active(&self.thm_types) {
            if !types.contains(&entry.record.thm_type) {
                return false;
            }
        }
        if let Some(doc_id) = self.doc_id.as_deref().filter(|d| !d.is_empty()) {
            if entry.record.doc_id != doc_id {
                return false;
            }
        }
        let needs_paper = active(&self.authors).is_some()
            || active(&self.tags).is_some()
            || self.year_range.is_some()
            || self.published_only == Some(true);
        if !needs_paper {
            return true;
        }
        let Some(paper) = &entry.paper else {
            return false;
        };
        if let Some(authors) = active(&self.authors) {
            if !paper.authors.iter().any(|a| authors.contains(a)) {
                return false;
            }
        }
        if let Some(tags) = active(&self.tags) {
            if !paper
                .tags
                .iter()
                .chain(std::iter::once(&paper.primary_tag))
                .any(|t| tags.contains(t))
            {
                return false;
            }
        }
        if let Some((lo, hi)) = self.year_range {
            if paper.year < lo || paper.year > hi {
                return false;
            }
        }
        if self.published_only == Some(true) && !paper.is_published() {
            return false;
        }
        true
    }
}

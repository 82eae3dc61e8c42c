use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Grading granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// The exact statement must be returned.
    Theorem,
    /// Any statement from the right document counts.
    Paper,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Theorem => "theorem",
            Level::Paper => "paper",
        }
    }
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "theorem" => Ok(Level::Theorem),
            "paper" => Ok(Level::Paper),
            other => Err(format!("unknown level {other:?}")),
        }
    }
}

/// A labeled validation query with at most one gold statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalQuery {
    pub query_id: String,
    pub query_text: String,
    #[serde(default)]
    pub gold_record_id: Option<String>,
    pub gold_doc_id: String,
}

impl EvalQuery {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.gold_doc_id.trim().is_empty() {
            return Err(EvalError::InvalidGold(self.query_id.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RankedItem {
    pub record_id: String,
    pub doc_id: String,
}

impl RankedItem {
    pub fn new(record_id: impl Into<String>, doc_id: impl Into<String>) -> Self {
        Self {
            record_id: record_id.into(),
            doc_id: doc_id.into(),
        }
    }
}

/// A system's ranked answer list for one query (position 0 is rank 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub query_id: String,
    pub ranked: Vec<RankedItem>,
}

impl RunResult {
    pub fn new(query_id: impl Into<String>, ranked: Vec<RankedItem>) -> Result<Self, EvalError> {
        let query_id = query_id.into();
        let mut seen = HashSet::new();
        if let Some(dup) = ranked
            .iter()
            .find(|item| !seen.insert(item.record_id.as_str()))
        {
            return Err(EvalError::DuplicateRecord {
                query_id,
                record_id: dup.record_id.clone(),
            });
        }
        Ok(Self { query_id, ranked })
    }
}

pub fn grade(item: &RankedItem, gold: &EvalQuery, level: Level) -> bool {
    match level {
        Level::Theorem => gold.gold_record_id.as_deref() == Some(item.record_id.as_str()),
        Level::Paper => item.doc_id == gold.gold_doc_id,
    }
}

/// Per-query summary of the top-k list.
struct QueryOutcome {
    matches: usize,
    first_rank: Option<usize>,
}

fn outcomes<'a>(
    runs: &'a [RunResult],
    golds: &'a [EvalQuery],
    k: usize,
    level: Level,
) -> Result<impl Iterator<Item = QueryOutcome> + 'a, EvalError> {
    if golds.is_empty() {
        return Err(EvalError::EmptyQuerySet);
    }
    if k == 0 {
        return Err(EvalError::InvalidK(k));
    }
    let by_query: HashMap<&str, &RunResult> =
        runs.iter().map(|r| (r.query_id.as_str(), r)).collect();
    Ok(golds.iter().map(move |gold| {
        let top = by_query
            .get(gold.query_id.as_str())
            .map_or(&[][..], |r| &r.ranked[..r.ranked.len().min(k)]);
        let mut matches = 0;
        let mut first_rank = None;
        for (pos, item) in top.iter().enumerate() {
            if grade(item, gold, level) {
                matches += 1;
                first_rank.get_or_insert(pos + 1);
            }
        }
        QueryOutcome {
            matches,
            first_rank,
        }
    }))
}

/// Mean over queries of (matches in top k) / k.
pub fn precision_at_k(
    runs: &[RunResult],
    golds: &[EvalQuery],
    k: usize,
    level: Level,
) -> Result<f64, EvalError> {
    let total: usize = outcomes(runs, golds, k, level)?.map(|o| o.matches).sum();
    Ok(total as f64 / (k as f64 * golds.len() as f64))
}

/// Fraction of queries with a match in the top k.
pub fn hit_at_k(
    runs: &[RunResult],
    golds: &[EvalQuery],
    k: usize,
    level: Level,
) -> Result<f64, EvalError> {
    let hits = outcomes(runs, golds, k, level)?
        .filter(|o| o.matches > 0)
        .count();
    Ok(hits as f64 / golds.len() as f64)
}

/// Mean reciprocal rank of the first match; a query with no match in the
/// top k contributes 0.
pub fn mrr_at_k(
    runs: &[RunResult],
    golds: &[EvalQuery],
    k: usize,
    level: Level,
) -> Result<f64, EvalError> {
    // Sum by rank bucket so the result does not depend on query order.
    let mut per_rank: BTreeMap<usize, usize> = BTreeMap::new();
    for outcome in outcomes(runs, golds, k, level)? {
        if let Some(rank) = outcome.first_rank {
            *per_rank.entry(rank).or_default() += 1;
        }
    }
    let sum: f64 = per_rank
        .iter()
        .map(|(rank, n)| *n as f64 / *rank as f64)
        .sum();
    Ok(sum / golds.len() as f64)
}

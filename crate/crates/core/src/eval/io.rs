//! JSON-lines formats for gold labels and system runs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{EvalQuery, RankedItem, RunResult};
use super::EvalError;

/// One ranked answer as written to a runs file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLine {
    pub query_id: String,
    pub rank: usize,
    pub record_id: String,
    pub doc_id: String,
    #[serde(default)]
    pub score: f64,
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_golds(text: &str) -> Result<Vec<EvalQuery>, EvalError> {
    let mut golds = Vec::new();
    for (line, raw) in lines(text) {
        let gold: EvalQuery = serde_json::from_str(raw).map_err(|e| EvalError::Parse {
            line,
            message: e.to_string(),
        })?;
        gold.validate()?;
        golds.push(gold);
    }
    Ok(golds)
}

/// Group run lines by query and order each list by rank. Lines may come
/// in any order.
pub fn parse_runs(text: &str) -> Result<Vec<RunResult>, EvalError> {
    let mut by_query: BTreeMap<String, Vec<RunLine>> = BTreeMap::new();
    for (line, raw) in lines(text) {
        let item: RunLine = serde_json::from_str(raw).map_err(|e| EvalError::Parse {
            line,
            message: e.to_string(),
        })?;
        if item.rank == 0 {
            return Err(EvalError::Parse {
                line,
                message: "rank must be at least 1".into(),
            });
        }
        by_query
            .entry(item.query_id.clone())
            .or_default()
            .push(item);
    }
    by_query
        .into_iter()
        .map(|(query_id, mut items)| {
            items.sort_by_key(|i| i.rank);
            let ranked = items
                .into_iter()
                .map(|i| RankedItem::new(i.record_id, i.doc_id))
                .collect();
            RunResult::new(query_id, ranked)
        })
        .collect()
}

/// Serialize ranked lists; `scores[q][i]` pairs with `runs[q].ranked[i]`.
pub fn runs_to_jsonl(runs: &[RunResult], scores: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for (q, run) in runs.iter().enumerate() {
        for (i, item) in run.ranked.iter().enumerate() {
            let line = RunLine {
                query_id: run.query_id.clone(),
                rank: i + 1,
                record_id: item.record_id.clone(),
                doc_id: item.doc_id.clone(),
                score: scores.get(q).and_then(|s| s.get(i)).copied().unwrap_or(0.0),
            };
            out.push_str(&serde_json::to_string(&line).expect("run line serializes"));
            out.push('\n');
        }
    }
    out
}

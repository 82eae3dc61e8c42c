//! Retrieval metrics at theorem and paper level, and report tables.

mod io;
mod metrics;
mod report;

use thiserror::Error;

pub use io::{parse_golds, parse_runs, runs_to_jsonl, RunLine};
pub use metrics::{
    grade, hit_at_k, mrr_at_k, precision_at_k, EvalQuery, Level, RankedItem, RunResult,
};
pub use report::{evaluate, report_columns, EvalReport, Metric, MetricColumn, SystemRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no labeled queries")]
    EmptyQuerySet,
    #[error("k must be at least 1, got {0}")]
    InvalidK(usize),
    #[error("query {query_id} lists {record_id} more than once")]
    DuplicateRecord { query_id: String, record_id: String },
    #[error("query {0} has no gold document")]
    InvalidGold(String),
    #[error("system {system} has no results for query {query_id}")]
    MissingQuery { system: String, query_id: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

//! `thmdx eval`: grade run files, or the live index, against gold labels.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thmdx_core::eval::{
    evaluate, parse_golds, parse_runs, runs_to_jsonl, EvalError, EvalQuery, EvalReport, Level,
    RankedItem, RunResult,
};

use crate::engine::{SearchEngine, SearchRequest};
use crate::jsonl::write_atomic;
use crate::ServiceError;

/// System name used for runs produced from the live index.
pub const LIVE_SYSTEM: &str = "thmdx";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const REPORT_JSON_FILE: &str = "report.json";

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub golds: PathBuf,
    /// Run files to grade; each file's stem names its system. When empty
    /// the live index is queried instead.
    pub runs: Vec<PathBuf>,
    pub ks: Vec<usize>,
    pub levels: Vec<Level>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub warnings: Vec<String>,
}

fn read(path: &Path) -> Result<String, ServiceError> {
    std::fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))
}

fn with_path(path: &Path, e: EvalError) -> ServiceError {
    match e {
        EvalError::Parse { line, message } => ServiceError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other.into(),
    }
}

/// Run every gold query through the engine at depth `k`. Returns the ranked
/// lists and the score of each item.
pub fn run_live(
    engine: &SearchEngine,
    golds: &[EvalQuery],
    k: usize,
) -> Result<(Vec<RunResult>, Vec<Vec<f64>>), ServiceError> {
    if k > engine.max_k() {
        tracing::warn!(
            k,
            max_k = engine.max_k(),
            "evaluation depth clamped to max_k"
        );
    }
    let mut runs = Vec::with_capacity(golds.len());
    let mut scores = Vec::with_capacity(golds.len());
    for gold in golds {
        let request = SearchRequest {
            k: Some(k),
            ..SearchRequest::new(&gold.query_text)
        };
        let response = engine
            .search(&request)
            .map_err(|e| ServiceError::Invalid(format!("query {}: {e}", gold.query_id)))?;
        let ranked = response
            .hits
            .iter()
            .map(|h| RankedItem::new(&h.record_id, &h.doc_id))
            .collect();
        scores.push(
            response
                .hits
                .iter()
                .map(|h| h.rerank_score.unwrap_or(h.composite))
                .collect(),
        );
        runs.push(RunResult::new(&gold.query_id, ranked)?);
    }
    Ok((runs, scores))
}

/// Grade and write `report.txt` and `report.json` into `out_dir`. `engine`
/// is only consulted when no run files are given.
pub fn run_eval(
    options: &EvalOptions,
    engine: impl FnOnce() -> Result<SearchEngine, ServiceError>,
) -> Result<EvalOutcome, ServiceError> {
    let golds = parse_golds(&read(&options.golds)?).map_err(|e| with_path(&options.golds, e))?;
    let mut systems = BTreeMap::new();
    for path in &options.runs {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let runs = parse_runs(&read(path)?).map_err(|e| with_path(path, e))?;
        if systems.insert(name.clone(), runs).is_some() {
            return Err(ServiceError::Invalid(format!(
                "two run files are named {name}"
            )));
        }
    }
    if systems.is_empty() {
        let engine = engine()?;
        let depth = options.ks.iter().copied().max().unwrap_or(1);
        let (runs, scores) = run_live(&engine, &golds, depth)?;
        write_atomic(
            &options.out_dir.join(format!("runs.{LIVE_SYSTEM}.jsonl")),
            runs_to_jsonl(&runs, &scores).as_bytes(),
        )?;
        systems.insert(LIVE_SYSTEM.to_string(), runs);
    }
    let (report, warnings) = evaluate(&systems, &golds, &options.ks, &options.levels)?;
    write_atomic(
        &options.out_dir.join(REPORT_TEXT_FILE),
        report.to_text().as_bytes(),
    )?;
    let mut json = serde_json::to_string_pretty(&report.to_json()).expect("report serializes");
    json.push('\n');
    write_atomic(&options.out_dir.join(REPORT_JSON_FILE), json.as_bytes())?;
    Ok(EvalOutcome { report, warnings })
}

//! Batch pipeline: ingest → sloganize → embed → index.
//!
//! Every stage reads the previous stage's JSON-lines output from the work
//! directory. Sloganize and embed append to their sidecar and skip record
//! ids already present, so an interrupted run resumes where it stopped.
//! Ingest and index rewrite their outputs whole; with the same inputs the
//! bytes are identical.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thmdx_core::enrich::{
    apply_task_instruction, build_slogan_prompt, embed_batch, generate_slogan, BatchOptions,
    EmbeddingVector, EnrichError, RetryPolicy, Side, Slogan,
};
use thmdx_core::extract::{
    extract_document, find_abstract, find_first_section, DocFormat, ExtractOptions, ParseReport,
    RawDocument, TheoremRecord,
};
use thmdx_core::index::{
    EntryMeta, IndexEntry, IndexError, Manifest, PaperMeta, VectorIndex, MANIFEST_FILE,
};

use crate::config::ServiceConfig;
use crate::jsonl::{open_sidecar, read_jsonl, read_stage_output, to_jsonl, write_atomic};
use crate::providers::Providers;
use crate::ServiceError;

pub const THEOREMS_FILE: &str = "theorems.jsonl";
pub const INGEST_REPORT_FILE: &str = "ingest_report.json";
pub const CONTEXTS_FILE: &str = "contexts.jsonl";
pub const SLOGANS_FILE: &str = "slogans.jsonl";
pub const SLOGAN_FAILURES_FILE: &str = "slogans.failed.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";
pub const EMBED_FAILURES_FILE: &str = "embeddings.failed.jsonl";

/// Texts embedded per request.
const EMBED_CHUNK: usize = 32;

/// Abstract and first section of a LaTeX source, for the slogan context
/// strategies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocContext {
    pub doc_id: String,
    #[serde(rename = "abstract", default, skip_serializing_if = "Option::is_none")]
    pub abstract_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub introduction: Option<String>,
}

/// A file or document that could not be processed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputError {
    pub source: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub documents: usize,
    pub records: usize,
    /// Sum of the per-document reports (its `doc_id` is empty).
    pub totals: ParseReport,
    pub sources: Vec<ParseReport>,
    pub errors: Vec<InputError>,
}

/// A record a stage could not process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub record_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageSummary {
    /// Records processed in this run.
    pub done: usize,
    /// Records already present in the output.
    pub skipped: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexSummary {
    pub manifest: Manifest,
    /// Records left out for lack of a slogan or an embedding.
    pub missing: usize,
}

pub fn work_file(config: &ServiceConfig, name: &str) -> PathBuf {
    config.work_dir.join(name)
}

fn input_files(path: &Path) -> Vec<PathBuf> {
    if path.is_dir() {
        walkdir::WalkDir::new(path)
            .sort_by_file_name()
            .into_iter()
            .filter_map(Result::ok)
            .filter(|e| e.file_type().is_file())
            .map(|e| e.into_path())
            .collect()
    } else {
        vec![path.to_path_buf()]
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Read every supported source under `paths`: `.tex` (LaTeX, doc id = file
/// stem), `.wiki`/`.wikitext`/`.mediawiki` (wikitext, doc id = file stem)
/// and `.jsonl` (one `RawDocument` per line). Other files are ignored.
pub fn load_documents(paths: &[PathBuf]) -> (Vec<RawDocument>, Vec<InputError>) {
    let mut docs = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    let mut fail = |source: &Path, message: String| {
        tracing::warn!(source = %source.display(), %message, "input skipped");
        errors.push(InputError {
            source: source.display().to_string(),
            message,
        });
    };
    for root in paths {
        if !root.exists() {
            fail(root, "no such file or directory".into());
            continue;
        }
        for file in input_files(root) {
            let ext = file
                .extension()
                .map(|e| e.to_string_lossy().to_ascii_lowercase())
                .unwrap_or_default();
            let found: Vec<RawDocument> = match ext.as_str() {
                "tex" | "wiki" | "wikitext" | "mediawiki" => match fs::read_to_string(&file) {
                    Ok(text) if ext == "tex" => {
                        vec![RawDocument::from_tex_source(stem(&file), &text)]
                    }
                    Ok(text) => vec![RawDocument::wikitext(stem(&file), text)],
                    Err(e) => {
                        fail(&file, e.to_string());
                        continue;
                    }
                },
                "jsonl" => match read_jsonl::<RawDocument>(&file) {
                    Ok(d) => d,
                    Err(e) => {
                        fail(&file, e.to_string());
                        continue;
                    }
                },
                _ => continue,
            };
            for doc in found {
                if doc.doc_id.trim().is_empty() {
                    fail(&file, "empty doc_id".into());
                } else if doc.body.trim().is_empty() {
                    fail(&file, format!("{}: empty body", doc.doc_id));
                } else if !seen.insert(doc.doc_id.clone()) {
                    fail(&file, format!("duplicate doc_id {}", doc.doc_id));
                } else {
                    docs.push(doc);
                }
            }
        }
    }
    (docs, errors)
}

/// Extract records from `inputs` (or the configured corpus paths when
/// empty) and write `theorems.jsonl`, `contexts.jsonl` and
/// `ingest_report.json`. A report with zero records is still written; the
/// caller decides whether that is fatal.
pub fn ingest(config: &ServiceConfig, inputs: &[PathBuf]) -> Result<IngestReport, ServiceError> {
    let inputs = if inputs.is_empty() {
        &config.corpus_paths[..]
    } else {
        inputs
    };
    let (docs, mut errors) = load_documents(inputs);
    let options = ExtractOptions::default();
    let mut records = Vec::new();
    let mut contexts = Vec::new();
    let mut sources = Vec::new();
    let mut totals = ParseReport::default();
    for doc in &docs {
        match extract_document(doc, &options) {
            Ok((found, report)) => {
                totals.merge(&report);
                sources.push(report);
                records.extend(found);
            }
            Err(e) => {
                tracing::warn!(doc_id = %doc.doc_id, error = %e, "document skipped");
                errors.push(InputError {
                    source: doc.doc_id.clone(),
                    message: e.to_string(),
                });
                continue;
            }
        }
        if doc.format == DocFormat::Latex {
            let context = DocContext {
                doc_id: doc.doc_id.clone(),
                abstract_text: find_abstract(&doc.body),
                introduction: find_first_section(&doc.body),
            };
            if context.abstract_text.is_some() || context.introduction.is_some() {
                contexts.push(context);
            }
        }
    }
    let report = IngestReport {
        documents: docs.len(),
        records: records.len(),
        totals,
        sources,
        errors,
    };
    write_atomic(
        &work_file(config, THEOREMS_FILE),
        to_jsonl(&records).as_bytes(),
    )?;
    write_atomic(
        &work_file(config, CONTEXTS_FILE),
        to_jsonl(&contexts).as_bytes(),
    )?;
    let mut text = serde_json::to_string_pretty(&report).expect("serializable");
    text.push('\n');
    write_atomic(&work_file(config, INGEST_REPORT_FILE), text.as_bytes())?;
    tracing::info!(
        documents = report.documents,
        records = report.records,
        "ingest finished"
    );
    Ok(report)
}

/// Paper metadata keyed by doc id; empty when no papers file is configured.
pub fn load_papers(config: &ServiceConfig) -> Result<HashMap<String, PaperMeta>, ServiceError> {
    let Some(path) = &config.papers_path else {
        return Ok(HashMap::new());
    };
    let mut out = HashMap::new();
    for paper in read_jsonl::<PaperMeta>(path)? {
        paper
            .validate()
            .map_err(|m| ServiceError::Invalid(format!("{}: {m}", path.display())))?;
        if out.contains_key(&paper.doc_id) {
            return Err(ServiceError::Invalid(format!(
                "{}: duplicate doc_id {}",
                path.display(),
                paper.doc_id
            )));
        }
        out.insert(paper.doc_id.clone(), paper);
    }
    Ok(out)
}

fn load_contexts(config: &ServiceConfig) -> Result<HashMap<String, DocContext>, ServiceError> {
    let path = work_file(config, CONTEXTS_FILE);
    if !path.exists() {
        return Ok(HashMap::new());
    }
    Ok(read_jsonl::<DocContext>(&path)?
        .into_iter()
        .map(|c| (c.doc_id.clone(), c))
        .collect())
}

fn write_failures(
    config: &ServiceConfig,
    name: &str,
    failures: &[StageFailure],
) -> Result<(), ServiceError> {
    write_atomic(&work_file(config, name), to_jsonl(failures).as_bytes())
}

/// Generate slogans for records that do not have one yet.
pub fn sloganize(
    config: &ServiceConfig,
    providers: &Providers,
) -> Result<StageSummary, ServiceError> {
    let records: Vec<TheoremRecord> =
        read_stage_output(&work_file(config, THEOREMS_FILE), "ingest")?;
    let contexts = load_contexts(config)?;
    let papers = load_papers(config)?;
    let strategy = config.slogan_strategy;
    let chat_config = config.chat_provider.provider_config();
    let (existing, mut sidecar) = open_sidecar::<Slogan>(&work_file(config, SLOGANS_FILE))?;
    if let Some(other) = existing.iter().find(|s| s.strategy != strategy) {
        return Err(ServiceError::Invalid(format!(
            "{SLOGANS_FILE} holds {} slogans but the configured strategy is {}; move the file away to regenerate",
            other.strategy.as_str(),
            strategy.as_str()
        )));
    }
    let done: HashSet<&str> = existing.iter().map(|s| s.record_id.as_str()).collect();
    let pending: Vec<&TheoremRecord> = records
        .iter()
        .filter(|r| !done.contains(r.record_id.as_str()))
        .collect();
    let mut summary = StageSummary {
        skipped: records.len() - pending.len(),
        ..StageSummary::default()
    };
    let mut failures = Vec::new();
    let retry = RetryPolicy::default();

    let make = |record: &TheoremRecord| -> Result<Slogan, EnrichError> {
        let context = contexts.get(&record.doc_id);
        let abstract_text = context.and_then(|c| c.abstract_text.clone()).or_else(|| {
            papers
                .get(&record.doc_id)
                .map(|p| p.abstract_text.clone())
                .filter(|a| !a.trim().is_empty())
        });
        let introduction = context.and_then(|c| c.introduction.clone());
        let prompt = build_slogan_prompt(
            strategy,
            &record.body,
            abstract_text.as_deref(),
            introduction.as_deref(),
        )?;
        generate_slogan(
            providers.chat.as_ref(),
            &chat_config,
            retry,
            &record.record_id,
            strategy,
            &prompt,
        )
    };

    for batch in pending.chunks(config.max_in_flight) {
        let results: Vec<Result<Slogan, EnrichError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = batch.iter().map(|r| scope.spawn(|| make(r))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("slogan worker panicked"))
                .collect()
        });
        for (record, result) in batch.iter().zip(results) {
            match result {
                Ok(slogan) => {
                    sidecar.append(&slogan)?;
                    summary.done += 1;
                }
                Err(e) => {
                    tracing::warn!(record_id = %record.record_id, error = %e, "slogan failed");
                    failures.push(StageFailure {
                        record_id: record.record_id.clone(),
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    sidecar.sync()?;
    summary.failed = failures.len();
    write_failures(config, SLOGAN_FAILURES_FILE, &failures)?;
    tracing::info!(?summary, "sloganize finished");
    Ok(summary)
}

/// Refuse to mix vector dimensions with an index already on disk.
pub fn check_index_dimension(config: &ServiceConfig) -> Result<(), ServiceError> {
    if !config.index_path.join(MANIFEST_FILE).exists() {
        return Ok(());
    }
    let manifest = Manifest::read(&config.index_path)?;
    let configured = config.embed_provider.dimension;
    if manifest.dimension != configured {
        return Err(IndexError::VersionMismatch {
            expected: format!("dimension {}", manifest.dimension),
            found: format!("dimension {configured}"),
        }
        .into());
    }
    Ok(())
}

/// Embed slogans that do not have a vector yet.
pub fn embed(config: &ServiceConfig, providers: &Providers) -> Result<StageSummary, ServiceError> {
    check_index_dimension(config)?;
    let dimension = config.embed_provider.dimension;
    let slogans: Vec<Slogan> = read_stage_output(&work_file(config, SLOGANS_FILE), "sloganize")?;
    let (existing, mut sidecar) =
        open_sidecar::<EmbeddingVector>(&work_file(config, EMBEDDINGS_FILE))?;
    if let Some(v) = existing
        .iter()
        .find(|v| v.dim != dimension || v.values.len() != dimension)
    {
        return Err(IndexError::VersionMismatch {
            expected: format!("dimension {}", v.values.len()),
            found: format!("dimension {dimension}"),
        }
        .into());
    }
    let mut seen: HashSet<&str> = existing.iter().map(|v| v.record_id.as_str()).collect();
    let total = slogans.len();
    let pending: Vec<&Slogan> = slogans
        .iter()
        .filter(|s| seen.insert(s.record_id.as_str()))
        .collect();
    let mut summary = StageSummary {
        skipped: total - pending.len(),
        ..StageSummary::default()
    };
    let embed_config = config.embed_provider.provider_config();
    let options = BatchOptions {
        max_in_flight: config.max_in_flight,
        chunk_size: EMBED_CHUNK,
        retry: RetryPolicy::default(),
    };
    let mut failures = Vec::new();
    for batch in pending.chunks(config.max_in_flight * EMBED_CHUNK) {
        let texts: Vec<String> = batch
            .iter()
            .map(|s| apply_task_instruction(&s.text, Side::Document, embed_config.instruction_mode))
            .collect();
        let results = embed_batch(providers.embed.as_ref(), &embed_config, &texts, &options);
        for (slogan, result) in batch.iter().zip(results) {
            match result {
                Ok(values) => {
                    sidecar.append(&EmbeddingVector::new(&slogan.record_id, values))?;
                    summary.done += 1;
                }
                Err(e) => {
                    tracing::warn!(record_id = %slogan.record_id, error = %e, "embedding failed");
                    failures.push(StageFailure {
                        record_id: slogan.record_id.clone(),
                        error: e.to_string(),
                    });
                }
            }
        }
        sidecar.sync()?;
    }
    summary.failed = failures.len();
    write_failures(config, EMBED_FAILURES_FILE, &failures)?;
    tracing::info!(?summary, "embed finished");
    Ok(summary)
}

/// Build the vector index from records, slogans, embeddings and paper
/// metadata, in `theorems.jsonl` order, and save it to `index_path`.
pub fn build_index(config: &ServiceConfig) -> Result<IndexSummary, ServiceError> {
    check_index_dimension(config)?;
    let records: Vec<TheoremRecord> =
        read_stage_output(&work_file(config, THEOREMS_FILE), "ingest")?;
    let slogans: BTreeMap<String, String> =
        read_stage_output::<Slogan>(&work_file(config, SLOGANS_FILE), "sloganize")?
            .into_iter()
            .map(|s| (s.record_id, s.text))
            .collect();
    let mut vectors: HashMap<String, Vec<f32>> =
        read_stage_output::<EmbeddingVector>(&work_file(config, EMBEDDINGS_FILE), "embed")?
            .into_iter()
            .map(|v| (v.record_id, v.values))
            .collect();
    let papers = load_papers(config)?;
    let mut index = VectorIndex::new(config.embed_provider.dimension, config.hnsw)?;
    let mut missing = 0;
    for record in records {
        let (Some(slogan), Some(vector)) = (
            slogans.get(&record.record_id),
            vectors.remove(&record.record_id),
        ) else {
            missing += 1;
            continue;
        };
        let paper = papers.get(&record.doc_id).cloned();
        index.insert(IndexEntry {
            vector,
            meta: EntryMeta {
                record,
                slogan: slogan.clone(),
                paper,
            },
        })?;
    }
    let manifest = index.save(&config.index_path)?;
    tracing::info!(count = manifest.count, missing, "index written");
    Ok(IndexSummary { manifest, missing })
}

/// Run all four stages.
pub fn build_all(
    config: &ServiceConfig,
    providers: &Providers,
) -> Result<IndexSummary, ServiceError> {
    let report = ingest(config, &[])?;
    if report.records == 0 {
        return Err(ServiceError::NoRecords);
    }
    sloganize(config, providers)?;
    embed(config, providers)?;
    build_index(config)
}

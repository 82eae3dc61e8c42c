#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub mod wire;

use tempfile::TempDir;
use thmdx::ServiceConfig;

pub const DIM: usize = 64;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn corpus() -> PathBuf {
    fixtures().join("corpus")
}

/// A scratch directory holding `thmdx.toml`; work, index and feedback
/// paths are relative to it.
pub struct Workspace {
    pub dir: TempDir,
    pub config_path: PathBuf,
}

impl Workspace {
    pub fn new() -> Self {
        Self::with("", "")
    }

    /// `top` goes before the first table, `tables` after the embed table.
    pub fn with(top: &str, tables: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("thmdx.toml");
        let text = format!(
            "corpus_paths = [{corpus:?}]\npapers_path = {papers:?}\n{top}\n\
             [embed_provider]\ndimension = {DIM}\ninstruction_mode = \"unprompted\"\n\n{tables}\n",
            corpus = corpus().display().to_string(),
            papers = fixtures().join("papers.jsonl").display().to_string(),
        );
        std::fs::write(&config_path, text).unwrap();
        Self { dir, config_path }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn config(&self) -> ServiceConfig {
        let text = std::fs::read_to_string(&self.config_path).unwrap();
        ServiceConfig::from_toml(&text, self.path()).unwrap()
    }

    pub fn work(&self, name: &str) -> PathBuf {
        self.path().join("work").join(name)
    }
}

/// Count theorem-like environments in the fixture sources with a scan that
/// shares no code with the extractor: `\begin{kind}` for the four kinds and
/// their short names, `\proclaim` headings of those kinds, and wiki section
/// headings naming a statement.
pub fn count_fixture_environments() -> usize {
    let kinds = [
        "theorem",
        "thm",
        "theo",
        "lemma",
        "lem",
        "proposition",
        "prop",
        "corollary",
        "cor",
        "corol",
    ];
    let mut total = 0;
    for entry in walk(&corpus()) {
        let text = std::fs::read_to_string(&entry).unwrap();
        let ext = entry.extension().unwrap().to_string_lossy().into_owned();
        if ext == "tex" {
            for line in text.lines() {
                if line.trim_start().starts_with('%') {
                    continue;
                }
                let mut rest = line;
                while let Some(at) = rest.find("\\begin{") {
                    let after = &rest[at + 7..];
                    let name = &after[..after.find('}').unwrap()];
                    let name = name.trim_end_matches('*').to_ascii_lowercase();
                    if kinds.contains(&name.as_str()) {
                        total += 1;
                    }
                    rest = after;
                }
                if let Some(at) = line.find("\\proclaim") {
                    let heading = line[at + 9..]
                        .trim_start_matches(['{', ' '])
                        .to_ascii_lowercase();
                    if kinds.iter().any(|k| heading.starts_with(k)) {
                        total += 1;
                    }
                }
            }
        } else {
            for line in text.lines() {
                let t = line.trim();
                if t.starts_with("==") && t.ends_with("==") {
                    let title = t.trim_matches('=').trim().to_ascii_lowercase();
                    if ["theorem", "lemma", "proposition", "corollary", "statement"]
                        .contains(&title.as_str())
                    {
                        total += 1;
                    }
                }
            }
        }
    }
    total
}

pub fn walk(root: &Path) -> Vec<PathBuf> {
    walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .collect()
}

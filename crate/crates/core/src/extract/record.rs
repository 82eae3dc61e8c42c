use std::fmt;

use serde::{Deserialize, Serialize};

/// Source markup of a [`RawDocument`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocFormat {
    Latex,
    Wikitext,
}

/// One source document as handed to the extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub doc_id: String,
    pub format: DocFormat,
    #[serde(default)]
    pub preamble: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
}

impl RawDocument {
    pub fn latex(
        doc_id: impl Into<String>,
        preamble: impl Into<String>,
        body: impl Into<String>,
    ) -> Self {
        Self {
            doc_id: doc_id.into(),
            format: DocFormat::Latex,
            preamble: preamble.into(),
            body: body.into(),
            source_url: None,
        }
    }

    pub fn wikitext(doc_id: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            format: DocFormat::Wikitext,
            preamble: String::new(),
            body: body.into(),
            source_url: None,
        }
    }

    /// Split a full `.tex` file at `\begin{document}`. Without that marker
    /// the preamble is empty and the whole text is the body.
    pub fn from_tex_source(doc_id: impl Into<String>, source: &str) -> Self {
        const BEGIN: &str = "\\begin{document}";
        const END: &str = "\\end{document}";
        let (preamble, body) = match source.find(BEGIN) {
            Some(at) => {
                let rest = &source[at + BEGIN.len()..];
                let body = match rest.find(END) {
                    Some(end) => &rest[..end],
                    None => rest,
                };
                (&source[..at], body)
            }
            None => ("", source),
        };
        Self::latex(doc_id, preamble, body)
    }
}

/// The four statement kinds kept in the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThmType {
    Theorem,
    Lemma,
    Proposition,
    Corollary,
}

impl ThmType {
    pub const ALL: [ThmType; 4] = [
        ThmType::Theorem,
        ThmType::Lemma,
        ThmType::Proposition,
        ThmType::Corollary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ThmType::Theorem => "theorem",
            ThmType::Lemma => "lemma",
            ThmType::Proposition => "proposition",
            ThmType::Corollary => "corollary",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ThmType::Theorem => "Theorem",
            ThmType::Lemma => "Lemma",
            ThmType::Proposition => "Proposition",
            ThmType::Corollary => "Corollary",
        }
    }
}

impl fmt::Display for ThmType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a record's `ref_number` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumberedBy {
    /// Per-document running counter.
    Counter,
    /// Number written out in the source (e.g. `\proclaim Theorem 2.1.`).
    Explicit,
    None,
}

/// One extracted statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRecord {
    pub record_id: String,
    pub doc_id: String,
    pub thm_type: ThmType,
    pub ref_number: Option<String>,
    pub note: Option<String>,
    pub label: Option<String>,
    pub body: String,
    pub name: String,
    pub source_url: Option<String>,
    pub numbered_by: NumberedBy,
}

/// Per-document extraction tallies. Reports from different documents merge
/// by summation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub doc_id: String,
    pub extracted: usize,
    pub filtered_short: usize,
    pub filtered_suffix: usize,
    pub unmatched_delimiters: usize,
    /// Theorem-like environments found inside another one and kept as body text.
    #[serde(default)]
    pub nested: usize,
    /// `\proclaim` spans whose heading is not one of the four statement kinds.
    #[serde(default)]
    pub skipped_proclaims: usize,
    /// Macro definitions that take arguments and were not expanded.
    #[serde(default)]
    pub skipped_macros: usize,
    /// Set when macro expansion hit the pass limit and the raw body was used.
    #[serde(default)]
    pub macro_pass_limit: bool,
}

impl ParseReport {
    pub fn new(doc_id: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            ..Self::default()
        }
    }

    pub fn filtered(&self) -> usize {
        self.filtered_short + self.filtered_suffix
    }

    pub fn merge(&mut self, other: &ParseReport) {
        self.extracted += other.extracted;
        self.filtered_short += other.filtered_short;
        self.filtered_suffix += other.filtered_suffix;
        self.unmatched_delimiters += other.unmatched_delimiters;
        self.nested += other.nested;
        self.skipped_proclaims += other.skipped_proclaims;
        self.skipped_macros += other.skipped_macros;
        self.macro_pass_limit |= other.macro_pass_limit;
    }
}

/// Map an environment identifier (the `X` in `\begin{X}`) to a statement kind.
/// Case-insensitive; a trailing `*` is ignored.
pub fn normalize_environment_name(raw: &str) -> Option<ThmType> {
    let name = raw.trim();
    let name = name.strip_suffix('*').unwrap_or(name).to_ascii_lowercase();
    match name.as_str() {
        "theorem" | "thm" | "theo" => Some(ThmType::Theorem),
        "lemma" | "lem" => Some(ThmType::Lemma),
        "proposition" | "prop" => Some(ThmType::Proposition),
        "corollary" | "cor" | "corol" => Some(ThmType::Corollary),
        _ => None,
    }
}

/// `"Theorem 3.9 (Shokurov reduction)"` style display name.
pub fn compose_name(thm_type: ThmType, ref_number: Option<&str>, note: Option<&str>) -> String {
    let mut name = String::from(thm_type.display_name());
    if let Some(number) = ref_number {
        name.push(' ');
        name.push_str(number);
    }
    if let Some(note) = note {
        name.push_str(" (");
        name.push_str(note);
        name.push(')');
    }
    name
}

pub const MIN_BODY_CHARS: usize = 8;
const BANNED_SUFFIXES: [&str; 2] = [" and", " let"];

/// Why a body was rejected by [`filter_malformed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Malformed {
    TooShort,
    TruncatedSuffix,
}

/// Classify a body; `None` means keep.
pub fn classify_malformed(body: &str) -> Option<Malformed> {
    let body = body.trim_end();
    if body.chars().count() < MIN_BODY_CHARS {
        Some(Malformed::TooShort)
    } else if BANNED_SUFFIXES.iter().any(|s| body.ends_with(s)) {
        Some(Malformed::TruncatedSuffix)
    } else {
        None
    }
}

/// Returns `true` if the body should be kept.
pub fn filter_malformed(body: &str) -> bool {
    classify_malformed(body).is_none()
}

/// Collapse whitespace runs to one space and trim.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

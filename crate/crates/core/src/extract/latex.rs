//! Delimiter-based theorem extraction from LaTeX sources.
//!
//! The document body is comment-stripped and macro-expanded, then scanned
//! for `\begin{env}` / `\end{env}` pairs whose environment normalizes to a
//! statement kind, and for `\proclaim ... \endproclaim` spans. Only outermost
//! spans become records; theorem-like environments nested inside one stay in
//! its body.

use std::sync::LazyLock;

use regex::Regex;
use tracing::warn;

use super::macros::MacroTable;
use super::record::{
    classify_malformed, collapse_whitespace, compose_name, normalize_environment_name, Malformed,
    NumberedBy, ParseReport, RawDocument, TheoremRecord, ThmType,
};
use super::scan::{balanced_group, skip_ws, strip_comments};
use super::ExtractError;

static ENV_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\\(begin|end)\s*\{\s*([A-Za-z]+\*?)\s*\}").unwrap());
static PROCLAIM_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\\(endproclaim|proclaim)[A-Za-z]*").unwrap());
static LABEL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\\label\s*\{([^{}]*)\}").unwrap());
static EXPLICIT_NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*([0-9]+(?:\.[0-9]+)*[a-z]?)\.?").unwrap());

/// How `ref_number` is assigned to environment-delimited statements.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Numbering {
    /// One running counter per document shared by all four kinds.
    #[default]
    Counter,
    /// Only numbers written in the source are kept.
    ExplicitOnly,
}

#[derive(Debug, Clone, Default)]
pub struct ExtractOptions {
    pub numbering: Numbering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokenKind<'a> {
    Begin(&'a str),
    End(&'a str),
    Proclaim,
    EndProclaim,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    kind: TokenKind<'a>,
    start: usize,
    end: usize,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens: Vec<Token<'_>> = ENV_TOKEN
        .captures_iter(text)
        .map(|c| {
            let whole = c.get(0).unwrap();
            let name = c.get(2).unwrap().as_str();
            let kind = if &c[1] == "begin" {
                TokenKind::Begin(name)
            } else {
                TokenKind::End(name)
            };
            Token {
                kind,
                start: whole.start(),
                end: whole.end(),
            }
        })
        .collect();
    for m in PROCLAIM_TOKEN.find_iter(text) {
        let kind = match m.as_str() {
            "\\proclaim" => TokenKind::Proclaim,
            "\\endproclaim" => TokenKind::EndProclaim,
            _ => continue,
        };
        tokens.push(Token {
            kind,
            start: m.start(),
            end: m.end(),
        });
    }
    tokens.sort_by_key(|t| t.start);
    tokens
}

fn is_theorem_begin(token: &Token<'_>) -> bool {
    matches!(token.kind, TokenKind::Begin(name) if normalize_environment_name(name).is_some())
}

/// The text the scanner works on: comments removed, macros expanded.
/// Falls back to the unexpanded text when expansion hits the pass limit.
pub fn prepare_body(doc: &RawDocument, table: &MacroTable, report: &mut ParseReport) -> String {
    let stripped = strip_comments(&doc.body);
    match table.expand(&stripped) {
        Ok(expanded) => expanded,
        Err(err) => {
            warn!(doc_id = %doc.doc_id, %err, "keeping unexpanded body");
            report.macro_pass_limit = true;
            stripped
        }
    }
}

/// A candidate span before filtering.
struct Candidate {
    thm_type: ThmType,
    explicit_number: Option<String>,
    note: Option<String>,
    label: Option<String>,
    body: String,
}

/// Extract statements from a LaTeX document with default options.
pub fn extract_theorems(
    doc: &RawDocument,
) -> Result<(Vec<TheoremRecord>, ParseReport), ExtractError> {
    extract_theorems_with(doc, &ExtractOptions::default())
}

pub fn extract_theorems_with(
    doc: &RawDocument,
    options: &ExtractOptions,
) -> Result<(Vec<TheoremRecord>, ParseReport), ExtractError> {
    if doc.format != super::DocFormat::Latex {
        return Err(ExtractError::WrongFormat {
            doc_id: doc.doc_id.clone(),
            expected: super::DocFormat::Latex,
        });
    }
    let table = MacroTable::from_preamble(&doc.preamble);
    let mut report = ParseReport::new(&doc.doc_id);
    report.skipped_macros = table.skipped_parameterized();
    let text = prepare_body(doc, &table, &mut report);

    let tokens = tokenize(&text);
    let mut candidates = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let token = tokens[i];
        match token.kind {
            TokenKind::Begin(name) => {
                let Some(thm_type) = normalize_environment_name(name) else {
                    i += 1;
                    continue;
                };
                match matching_end(&tokens, i, name) {
                    Some(j) => {
                        report.nested += tokens[i + 1..j]
                            .iter()
                            .filter(|t| is_theorem_begin(t))
                            .count();
                        let inner = &text[token.end..tokens[j].start];
                        candidates.push(environment_candidate(thm_type, inner));
                        i = j + 1;
                    }
                    None => {
                        warn!(doc_id = %doc.doc_id, env = name, offset = token.start, "unbalanced theorem delimiter");
                        report.unmatched_delimiters += 1;
                        i += 1;
                    }
                }
            }
            TokenKind::Proclaim => {
                let close = tokens[i + 1..]
                    .iter()
                    .position(|t| t.kind == TokenKind::EndProclaim)
                    .map(|p| p + i + 1);
                match close {
                    Some(j) => {
                        report.nested += tokens[i + 1..j]
                            .iter()
                            .filter(|t| is_theorem_begin(t))
                            .count();
                        let inner = &text[token.end..tokens[j].start];
                        match proclaim_candidate(inner) {
                            Some(c) => candidates.push(c),
                            None => report.skipped_proclaims += 1,
                        }
                        i = j + 1;
                    }
                    None => {
                        warn!(doc_id = %doc.doc_id, offset = token.start, "\\proclaim without \\endproclaim");
                        report.unmatched_delimiters += 1;
                        i += 1;
                    }
                }
            }
            TokenKind::End(_) | TokenKind::EndProclaim => i += 1,
        }
    }

    let mut records = Vec::new();
    for (ordinal, candidate) in candidates.into_iter().enumerate() {
        let counter = ordinal + 1;
        match classify_malformed(&candidate.body) {
            Some(Malformed::TooShort) => {
                report.filtered_short += 1;
                continue;
            }
            Some(Malformed::TruncatedSuffix) => {
                report.filtered_suffix += 1;
                continue;
            }
            None => {}
        }
        let (ref_number, numbered_by) = match (candidate.explicit_number, options.numbering) {
            (Some(n), _) => (Some(n), NumberedBy::Explicit),
            (None, Numbering::Counter) => (Some(counter.to_string()), NumberedBy::Counter),
            (None, Numbering::ExplicitOnly) => (None, NumberedBy::None),
        };
        let name = compose_name(
            candidate.thm_type,
            ref_number.as_deref(),
            candidate.note.as_deref(),
        );
        records.push(TheoremRecord {
            record_id: format!("{}#{}", doc.doc_id, counter),
            doc_id: doc.doc_id.clone(),
            thm_type: candidate.thm_type,
            ref_number,
            note: candidate.note,
            label: candidate.label,
            body: candidate.body,
            name,
            source_url: doc.source_url.clone(),
            numbered_by,
        });
    }
    report.extracted = records.len();
    Ok((records, report))
}

/// Index of the `\end{name}` closing `tokens[open]`, counting nested
/// environments of the same name.
fn matching_end(tokens: &[Token<'_>], open: usize, name: &str) -> Option<usize> {
    let mut depth = 1usize;
    for (j, token) in tokens.iter().enumerate().skip(open + 1) {
        match token.kind {
            TokenKind::Begin(n) if n == name => depth += 1,
            TokenKind::End(n) if n == name => {
                depth -= 1;
                if depth == 0 {
                    return Some(j);
                }
            }
            _ => {}
        }
    }
    None
}

fn environment_candidate(thm_type: ThmType, inner: &str) -> Candidate {
    let mut rest = inner;
    let mut note = None;
    let at = skip_ws(inner, 0);
    if inner[at..].starts_with('[') {
        if let Some((range, end)) = balanced_group(inner, at, b'[', b']') {
            let text = collapse_whitespace(&inner[range]);
            note = (!text.is_empty()).then_some(text);
            rest = &inner[end..];
        }
    }
    let (label, body) = take_labels(rest);
    Candidate {
        thm_type,
        explicit_number: None,
        note,
        label,
        body,
    }
}

/// Heading is the braced group right after `\proclaim`, or otherwise the
/// first line up to the first ". ".
fn proclaim_candidate(inner: &str) -> Option<Candidate> {
    let at = inner
        .bytes()
        .position(|b| b != b' ' && b != b'\t')
        .unwrap_or(inner.len());
    let (heading, rest) = if inner[at..].starts_with('{') {
        let (range, end) = balanced_group(inner, at, b'{', b'}')?;
        (&inner[range], &inner[end..])
    } else {
        let line_end = inner[at..].find('\n').map_or(inner.len(), |p| at + p);
        let line = &inner[at..line_end];
        match line.find(". ") {
            Some(p) => (&line[..p + 1], &inner[at + p + 1..]),
            None => (line, &inner[line_end..]),
        }
    };
    let (thm_type, explicit_number, note) = parse_proclaim_heading(heading)?;
    let (label, body) = take_labels(rest);
    Some(Candidate {
        thm_type,
        explicit_number,
        note,
        label,
        body,
    })
}

fn parse_proclaim_heading(heading: &str) -> Option<(ThmType, Option<String>, Option<String>)> {
    let heading = heading.trim();
    let word_len = heading
        .bytes()
        .take_while(|b| b.is_ascii_alphabetic())
        .count();
    let thm_type = normalize_environment_name(&heading[..word_len])?;
    let mut rest = &heading[word_len..];
    let mut number = None;
    if let Some(c) = EXPLICIT_NUMBER.captures(rest) {
        number = Some(c[1].to_string());
        rest = &rest[c.get(0).unwrap().end()..];
    }
    let mut note = None;
    let at = skip_ws(rest, 0);
    if rest[at..].starts_with('(') {
        if let Some((range, _)) = balanced_group(rest, at, b'(', b')') {
            let text = collapse_whitespace(&rest[range]);
            note = (!text.is_empty()).then_some(text);
        }
    }
    Some((thm_type, number, note))
}

/// Remove every `\label{..}`; return the first key and the collapsed body.
fn take_labels(text: &str) -> (Option<String>, String) {
    let label = LABEL.captures(text).map(|c| c[1].trim().to_string());
    let body = collapse_whitespace(&LABEL.replace_all(text, " "));
    (label, body)
}

/// Drop all `\label{..}` commands from a text. Used by the locality check.
pub fn strip_labels(text: &str) -> String {
    LABEL.replace_all(text, " ").into_owned()
}

/// Abstract from a `\begin{abstract}` environment, if any.
pub fn find_abstract(body: &str) -> Option<String> {
    let start = body.find("\\begin{abstract}")? + "\\begin{abstract}".len();
    let end = body[start..].find("\\end{abstract}")? + start;
    let text = collapse_whitespace(&strip_comments(&body[start..end]));
    (!text.is_empty()).then_some(text)
}

/// Text of the first `\section{..}` up to the next `\section` (or the end).
pub fn find_first_section(body: &str) -> Option<String> {
    static SECTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\\section\*?\s*\{").unwrap());
    let first = SECTION.find(body)?;
    let heading_open = first.end() - 1;
    let (_, after_heading) = balanced_group(body, heading_open, b'{', b'}')?;
    let end = SECTION
        .find(&body[after_heading..])
        .map_or(body.len(), |m| after_heading + m.start());
    let text = collapse_whitespace(&strip_comments(&body[after_heading..end]));
    (!text.is_empty()).then_some(text)
}

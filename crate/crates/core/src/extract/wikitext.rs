//! ProofWiki-style wikitext pages.

use std::sync::LazyLock;

use regex::Regex;

use super::record::{
    classify_malformed, collapse_whitespace, compose_name, normalize_environment_name, Malformed,
    NumberedBy, ParseReport, RawDocument, TheoremRecord, ThmType,
};
use super::ExtractError;

static HEADING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^(={2,6})[ \t]*([^=\n]+?)[ \t]*={2,6}[ \t]*$").unwrap());
static ONLYINCLUDE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)</?onlyinclude\s*/?>").unwrap());
static MATH: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)<math(?:\s[^>]*)?>(.*?)</math\s*>").unwrap());
static TEMPLATE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{\{[^{}]*\}\}").unwrap());
static PIPED_LINK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[\[([^\[\]|]*)\|([^\[\]]*)\]\]").unwrap());
static LINK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[\[([^\[\]|]*)\]\]").unwrap());

const MATH_SLOT: char = '\u{E000}';

/// Kind of statement a section heading announces, if any.
fn statement_heading(title: &str) -> Option<ThmType> {
    let first = title.split_whitespace().next()?;
    if first.eq_ignore_ascii_case("statement") {
        return Some(ThmType::Theorem);
    }
    normalize_environment_name(first)
}

fn is_proof_heading(title: &str) -> bool {
    title
        .split_whitespace()
        .next()
        .is_some_and(|w| w.eq_ignore_ascii_case("proof") || w.eq_ignore_ascii_case("proofs"))
}

/// Raw text of the statement section: from the first statement heading up
/// to the next proof heading (or the end of the page).
pub fn statement_section(page_text: &str) -> Result<(ThmType, &str), ExtractError> {
    let mut headings = HEADING.captures_iter(page_text);
    let (thm_type, start) = headings
        .by_ref()
        .find_map(|c| statement_heading(&c[2]).map(|t| (t, c.get(0).unwrap().end())))
        .ok_or(ExtractError::NoStatementSection)?;
    let end = headings
        .find(|c| c.get(0).unwrap().start() >= start && is_proof_heading(&c[2]))
        .map_or(page_text.len(), |c| c.get(0).unwrap().start());
    Ok((thm_type, &page_text[start..end]))
}

/// Apply the markup rewrites to a wikitext fragment: drop `<onlyinclude>`
/// tags and `{{templates}}`, unwrap `[[links]]`, turn `<math>X</math>` into
/// `$X$`, collapse whitespace. Math content is shielded from the template
/// and link rules.
pub fn clean_wikitext_markup(fragment: &str) -> String {
    let mut math_blocks = Vec::new();
    let shielded = MATH.replace_all(fragment, |c: &regex::Captures<'_>| {
        math_blocks.push(c[1].trim().to_string());
        MATH_SLOT.to_string()
    });
    let mut text = ONLYINCLUDE.replace_all(&shielded, "").into_owned();
    loop {
        let next = TEMPLATE.replace_all(&text, "").into_owned();
        if next == text {
            break;
        }
        text = next;
    }
    let text = PIPED_LINK.replace_all(&text, "$2");
    let text = LINK.replace_all(&text, "$1");
    let mut blocks = math_blocks.into_iter();
    let restored: String = text
        .chars()
        .map(|ch| match ch {
            MATH_SLOT => format!("${}$", blocks.next().unwrap_or_default()),
            other => other.to_string(),
        })
        .collect();
    collapse_whitespace(&restored)
}

/// Statement section of a page with markup removed.
pub fn clean_wikitext(page_text: &str) -> Result<String, ExtractError> {
    let (_, section) = statement_section(page_text)?;
    Ok(clean_wikitext_markup(section))
}

/// One record per page. The page title (`doc_id`) becomes the note; pages
/// carry no reference numbers.
pub fn extract_wikitext(
    doc: &RawDocument,
) -> Result<(Vec<TheoremRecord>, ParseReport), ExtractError> {
    if doc.format != super::DocFormat::Wikitext {
        return Err(ExtractError::WrongFormat {
            doc_id: doc.doc_id.clone(),
            expected: super::DocFormat::Wikitext,
        });
    }
    let (thm_type, section) = statement_section(&doc.body)?;
    let body = clean_wikitext_markup(section);
    let mut report = ParseReport::new(&doc.doc_id);
    match classify_malformed(&body) {
        Some(Malformed::TooShort) => {
            report.filtered_short = 1;
            return Ok((Vec::new(), report));
        }
        Some(Malformed::TruncatedSuffix) => {
            report.filtered_suffix = 1;
            return Ok((Vec::new(), report));
        }
        None => {}
    }
    let title = collapse_whitespace(&doc.doc_id.replace('_', " "));
    let note = (!title.is_empty()).then_some(title);
    let source_url = doc.source_url.clone().or_else(|| {
        Some(format!(
            "https://proofwiki.org/wiki/{}",
            doc.doc_id.replace(' ', "_")
        ))
    });
    report.extracted = 1;
    Ok((
        vec![TheoremRecord {
            record_id: format!("{}#1", doc.doc_id),
            doc_id: doc.doc_id.clone(),
            thm_type,
            ref_number: None,
            name: compose_name(thm_type, None, note.as_deref()),
            note,
            label: None,
            body,
            source_url,
            numbered_by: NumberedBy::None,
        }],
        report,
    ))
}

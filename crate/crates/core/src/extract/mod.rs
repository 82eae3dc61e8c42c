//! Theorem extraction from LaTeX and wikitext sources.

mod latex;
mod macros;
mod record;
mod scan;
mod wikitext;

use thiserror::Error;

pub use latex::{
    extract_theorems, extract_theorems_with, find_abstract, find_first_section, prepare_body,
    strip_labels, ExtractOptions, Numbering,
};
pub use macros::{build_macro_table, expand_macros, MacroError, MacroTable, MAX_EXPANSION_PASSES};
pub use record::{
    classify_malformed, collapse_whitespace, compose_name, filter_malformed,
    normalize_environment_name, DocFormat, Malformed, NumberedBy, ParseReport, RawDocument,
    TheoremRecord, ThmType, MIN_BODY_CHARS,
};
pub use wikitext::{clean_wikitext, clean_wikitext_markup, extract_wikitext, statement_section};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("document {doc_id} is not {expected:?}")]
    WrongFormat { doc_id: String, expected: DocFormat },
    #[error("no recognizable statement section heading")]
    NoStatementSection,
}

/// Dispatch on the document format.
pub fn extract_document(
    doc: &RawDocument,
    options: &ExtractOptions,
) -> Result<(Vec<TheoremRecord>, ParseReport), ExtractError> {
    match doc.format {
        DocFormat::Latex => extract_theorems_with(doc, options),
        DocFormat::Wikitext => extract_wikitext(doc),
    }
}

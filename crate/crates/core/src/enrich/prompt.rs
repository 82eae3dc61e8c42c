//! Slogan prompts and embedding task instructions.

use serde::{Deserialize, Serialize};

use super::EnrichError;

/// Which paper context accompanies the theorem body when generating a slogan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SloganStrategy {
    #[default]
    BodyOnly,
    BodyAbstract,
    BodyIntroduction,
}

impl SloganStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            SloganStrategy::BodyOnly => "body_only",
            SloganStrategy::BodyAbstract => "body_abstract",
            SloganStrategy::BodyIntroduction => "body_introduction",
        }
    }

    pub fn system_prompt(self) -> &'static str {
        match self {
            SloganStrategy::BodyOnly => BODY_ONLY_PROMPT,
            SloganStrategy::BodyAbstract => BODY_ABSTRACT_PROMPT,
            SloganStrategy::BodyIntroduction => BODY_INTRODUCTION_PROMPT,
        }
    }

    fn needs_abstract(self) -> bool {
        self != SloganStrategy::BodyOnly
    }

    fn needs_first_section(self) -> bool {
        self == SloganStrategy::BodyIntroduction
    }
}

impl std::str::FromStr for SloganStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "body_only" => Ok(SloganStrategy::BodyOnly),
            "body_abstract" => Ok(SloganStrategy::BodyAbstract),
            "body_introduction" => Ok(SloganStrategy::BodyIntroduction),
            other => Err(format!("unknown slogan strategy {other:?}")),
        }
    }
}

pub const BODY_ONLY_PROMPT: &str = "You generate summaries of math theorems based on theorem_body. Summaries are accurate and at most four sentences. Summaries are plain ASCII sentences with no Unicode. Describe the result without referencing it as 'this theorem' or similar. Avoid LaTeX and mathematical symbols; use words instead. Output only the final summary sentences, with no reasoning, explanations, or commentary. Do not restate the prompt, input fields, or instructions. Do not include proof steps, motivation, or background discussion.";

pub const BODY_ABSTRACT_PROMPT: &str = "You generate summaries of math theorems based on theorem_body. You also consider paper_summary in your summaries. Summaries are accurate and at most four sentences. Summaries are plain ASCII sentences with no Unicode. Describe the result without referencing it as 'this theorem' or similar. Avoid LaTeX and mathematical symbols; use words instead. Output only the final summary sentences, with no reasoning, explanations, or commentary. Do not restate the prompt, input fields, or instructions. Do not include proof steps, motivation, or background discussion.";

pub const BODY_INTRODUCTION_PROMPT: &str = "You generate summaries of math theorems based on theorem_body. You also consider paper_summary and the first section of the paper in your summaries. Summaries are accurate and at most four sentences. Summaries are plain ASCII sentences with no Unicode. Describe the result without referencing it as 'this theorem' or similar. Avoid LaTeX and mathematical symbols; use words instead. Output only the final summary sentences, with no reasoning, explanations, or commentary. Do not restate the prompt, input fields, or instructions. Do not include proof steps, motivation, or background discussion.";

/// Field labels of the user message.
pub const BODY_FIELD: &str = "theorem_body:";
pub const SUMMARY_FIELD: &str = "paper_summary:";
pub const FIRST_SECTION_FIELD: &str = "first_section:";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SloganPrompt {
    pub system: String,
    pub user: String,
}

fn present(s: Option<&str>) -> Option<&str> {
    s.filter(|t| !t.trim().is_empty())
}

/// Build the (system, user) pair for a strategy. Context the strategy does
/// not use is ignored; context it needs must be present and non-blank.
pub fn build_slogan_prompt(
    strategy: SloganStrategy,
    theorem_body: &str,
    abstract_text: Option<&str>,
    first_section: Option<&str>,
) -> Result<SloganPrompt, EnrichError> {
    let mut user = format!("{BODY_FIELD}\n{theorem_body}");
    if strategy.needs_abstract() {
        let summary = present(abstract_text).ok_or(EnrichError::MissingContext {
            strategy,
            field: "paper_summary",
        })?;
        user.push_str(&format!("\n\n{SUMMARY_FIELD}\n{summary}"));
    }
    if strategy.needs_first_section() {
        let section = present(first_section).ok_or(EnrichError::MissingContext {
            strategy,
            field: "first_section",
        })?;
        user.push_str(&format!("\n\n{FIRST_SECTION_FIELD}\n{section}"));
    }
    Ok(SloganPrompt {
        system: strategy.system_prompt().to_string(),
        user,
    })
}

/// Which side of the asymmetric retrieval task a text is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Document,
    Query,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionMode {
    #[default]
    Prompted,
    Unprompted,
}

pub const DOCUMENT_INSTRUCTION: &str = "Instruct: Represent the given math statement for retrieving related statement by natural language query.\nQuery:";
pub const QUERY_INSTRUCTION: &str = "Instruct: Given a math search query, retrieve theorems mathematically equivalent to the query.\nQuery:";

pub fn apply_task_instruction(text: &str, side: Side, mode: InstructionMode) -> String {
    match (mode, side) {
        (InstructionMode::Unprompted, _) => text.to_string(),
        (InstructionMode::Prompted, Side::Document) => format!("{DOCUMENT_INSTRUCTION}{text}"),
        (InstructionMode::Prompted, Side::Query) => format!("{QUERY_INSTRUCTION}{text}"),
    }
}

//! Slogan generation and embedding through pluggable model providers.

mod embed;
pub mod http;
pub mod mock;
mod prompt;
mod provider;
mod slogan;

use thiserror::Error;

pub use embed::{embed_batch, embed_text, BatchOptions, EmbeddingVector};
pub use prompt::{
    apply_task_instruction, build_slogan_prompt, InstructionMode, Side, SloganPrompt,
    SloganStrategy, BODY_ABSTRACT_PROMPT, BODY_INTRODUCTION_PROMPT, BODY_ONLY_PROMPT,
    DOCUMENT_INSTRUCTION, QUERY_INSTRUCTION,
};
pub use provider::{
    ChatProvider, ChatProviderConfig, ChatRequest, EmbedProvider, EmbedProviderConfig,
    ProviderError, RerankProvider, RerankProviderConfig, RetryPolicy,
};
pub use slogan::{generate_slogan, Slogan};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnrichError {
    #[error("strategy {strategy:?} requires {field}")]
    MissingContext {
        strategy: SloganStrategy,
        field: &'static str,
    },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("slogan for {record_id} is not plain ASCII")]
    NonAsciiOutput { record_id: String },
    #[error("expected {expected}-dimensional embedding, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding contains a non-finite value")]
    NonFiniteValue,
    #[error("cannot embed empty text")]
    EmptyText,
}

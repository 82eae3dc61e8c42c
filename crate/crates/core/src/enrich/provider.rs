use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::InstructionMode;

/// Failure talking to a remote model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("provider returned an empty completion")]
    EmptyCompletion,
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
}

impl ProviderError {
    /// Transport failures, 429 and 5xx are worth one more try.
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    /// One retry after 1 s.
    fn default() -> Self {
        Self {
            retries: 1,
            initial_backoff: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    pub fn immediate(retries: u32) -> Self {
        Self {
            retries,
            initial_backoff: Duration::ZERO,
        }
    }

    /// Backoff before retry number `attempt` (1-based): 1s, 2s, 4s, ...
    pub fn backoff(&self, attempt: u32) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(attempt.saturating_sub(1))
    }

    pub(crate) fn sleep_before(&self, attempt: u32) {
        let wait = self.backoff(attempt);
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }

    /// Run `op`, retrying retryable provider errors.
    pub fn run<T>(
        &self,
        mut op: impl FnMut() -> Result<T, ProviderError>,
    ) -> Result<T, ProviderError> {
        let mut attempt = 0;
        loop {
            match op() {
                Err(err) if err.is_retryable() && attempt < self.retries => {
                    attempt += 1;
                    tracing::debug!(%err, attempt, "retrying provider call");
                    self.sleep_before(attempt);
                }
                other => return other,
            }
        }
    }
}

fn default_temperature() -> f32 {
    0.2
}

fn default_max_output_tokens() -> u32 {
    1024
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    #[serde(default = "default_temperature")]
    pub temperature: f32,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default)]
    pub api_key_env: String,
}

impl ChatProviderConfig {
    pub fn new(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            temperature: default_temperature(),
            max_output_tokens: default_max_output_tokens(),
            api_key_env: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if self.max_output_tokens == 0 {
            return Err("max_output_tokens must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub dimension: usize,
    #[serde(default)]
    pub api_key_env: String,
    #[serde(default)]
    pub instruction_mode: InstructionMode,
}

impl EmbedProviderConfig {
    pub fn new(
        endpoint_url: impl Into<String>,
        model_name: impl Into<String>,
        dimension: usize,
    ) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            dimension,
            api_key_env: String::new(),
            instruction_mode: InstructionMode::default(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.dimension == 0 {
            return Err("embedding dimension must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    #[serde(default)]
    pub api_key_env: String,
}

/// One chat completion request.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    pub temperature: f32,
    pub max_output_tokens: u32,
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

pub trait EmbedProvider: Send + Sync {
    /// One vector per input, in input order.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError>;
}

/// Cross-encoder scoring of (query, candidate) pairs; higher is more relevant.
pub trait RerankProvider: Send + Sync {
    fn score(&self, query: &str, candidates: &[String]) -> Result<Vec<f32>, ProviderError>;
}

impl<T: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<T: EmbedProvider + ?Sized> EmbedProvider for std::sync::Arc<T> {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        (**self).embed(texts)
    }
}

impl<T: RerankProvider + ?Sized> RerankProvider for std::sync::Arc<T> {
    fn score(&self, query: &str, candidates: &[String]) -> Result<Vec<f32>, ProviderError> {
        (**self).score(query, candidates)
    }
}

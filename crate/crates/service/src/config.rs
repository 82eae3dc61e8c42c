//! Service configuration: one TOML file plus `THMDX_*` environment overrides.
//!
//! Relative paths in the file are resolved against the file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thmdx_core::enrich::http::{EmbedWireProfile, RerankWireProfile};
use thmdx_core::enrich::{
    ChatProviderConfig, EmbedProviderConfig, InstructionMode, RerankProviderConfig, SloganStrategy,
};
use thmdx_core::index::{candidate_pool_size, HnswParams, MAX_POOL};

use crate::ServiceError;

/// Largest k for which the candidate pool is still 12k-proportional before
/// the 800 clamp.
pub const MAX_K_LIMIT: usize = MAX_POOL / 12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

fn default_model() -> String {
    "mock".into()
}

fn default_temperature() -> f32 {
    0.2
}

fn default_max_tokens() -> u32 {
    1024
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatSection {
    #[serde(default)]
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(default = "default_model")]
    pub model_name: String,
    #[serde(default = "default_temperature")]
    pub temperature: f32,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default)]
    pub api_key_env: String,
}

impl Default for ChatSection {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Mock,
            endpoint_url: String::new(),
            model_name: default_model(),
            temperature: default_temperature(),
            max_output_tokens: default_max_tokens(),
            api_key_env: String::new(),
        }
    }
}

impl ChatSection {
    pub fn provider_config(&self) -> ChatProviderConfig {
        ChatProviderConfig {
            endpoint_url: self.endpoint_url.clone(),
            model_name: self.model_name.clone(),
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
            api_key_env: self.api_key_env.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedSection {
    #[serde(default)]
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(default = "default_model")]
    pub model_name: String,
    pub dimension: usize,
    #[serde(default)]
    pub api_key_env: String,
    #[serde(default)]
    pub instruction_mode: InstructionMode,
    #[serde(default)]
    pub wire: EmbedWireProfile,
}

impl EmbedSection {
    pub fn provider_config(&self) -> EmbedProviderConfig {
        EmbedProviderConfig {
            endpoint_url: self.endpoint_url.clone(),
            model_name: self.model_name.clone(),
            dimension: self.dimension,
            api_key_env: self.api_key_env.clone(),
            instruction_mode: self.instruction_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RerankSection {
    #[serde(default)]
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(default = "default_model")]
    pub model_name: String,
    #[serde(default)]
    pub api_key_env: String,
    #[serde(default)]
    pub wire: RerankWireProfile,
}

impl RerankSection {
    pub fn provider_config(&self) -> RerankProviderConfig {
        RerankProviderConfig {
            endpoint_url: self.endpoint_url.clone(),
            model_name: self.model_name.clone(),
            api_key_env: self.api_key_env.clone(),
        }
    }
}

fn default_work_dir() -> PathBuf {
    "work".into()
}
fn default_index_path() -> PathBuf {
    "index".into()
}
fn default_listen() -> String {
    "127.0.0.1:8080".into()
}
fn default_k() -> usize {
    10
}
fn default_max_k() -> usize {
    MAX_K_LIMIT
}
fn default_feedback_log() -> PathBuf {
    "feedback.jsonl".into()
}
fn default_in_flight() -> usize {
    8
}
fn default_feedback_queue() -> usize {
    1024
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_index_path")]
    pub index_path: PathBuf,
    #[serde(default)]
    pub corpus_paths: Vec<PathBuf>,
    /// Directory for the intermediate JSON-lines sidecars.
    #[serde(default = "default_work_dir")]
    pub work_dir: PathBuf,
    /// JSON-lines file of `PaperMeta`, joined to records by `doc_id`.
    #[serde(default)]
    pub papers_path: Option<PathBuf>,
    pub embed_provider: EmbedSection,
    #[serde(default)]
    pub chat_provider: ChatSection,
    #[serde(default)]
    pub rerank_provider: Option<RerankSection>,
    #[serde(default)]
    pub slogan_strategy: SloganStrategy,
    #[serde(default = "default_listen")]
    pub listen_address: String,
    #[serde(default = "default_k")]
    pub default_k: usize,
    #[serde(default = "default_max_k")]
    pub max_k: usize,
    #[serde(default = "default_feedback_log")]
    pub feedback_log_path: PathBuf,
    /// Extra origins allowed by CORS; `"*"` allows any.
    #[serde(default)]
    pub cors_allowed_origins: Vec<String>,
    /// Provider requests in flight at once during pipeline stages.
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    /// Capacity of the feedback appender queue.
    #[serde(default = "default_feedback_queue")]
    pub feedback_queue: usize,
    #[serde(default)]
    pub hnsw: HnswParams,
}

impl ServiceConfig {
    /// Parse TOML text; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ServiceError> {
        let mut config: ServiceConfig =
            toml::from_str(text).map_err(|e| ServiceError::Config(e.message().to_string()))?;
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    /// Read a config file and apply environment overrides.
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut config = Self::from_toml(&text, base)?;
        config.apply_env(|key| std::env::var(key).ok())?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.index_path);
        fix(&mut self.work_dir);
        fix(&mut self.feedback_log_path);
        self.corpus_paths.iter_mut().for_each(fix);
        if let Some(p) = self.papers_path.as_mut() {
            fix(p);
        }
    }

    /// Override settings from `THMDX_*` variables. Provider secrets are not
    /// handled here; they are read from the variables named by `api_key_env`
    /// at request time.
    pub fn apply_env(
        &mut self,
        lookup: impl Fn(&str) -> Option<String>,
    ) -> Result<(), ServiceError> {
        let parse_usize = |key: &str, v: String| {
            v.parse::<usize>().map_err(|_| {
                ServiceError::Config(format!("{key}: not a non-negative integer: {v:?}"))
            })
        };
        if let Some(v) = lookup("THMDX_LISTEN_ADDRESS") {
            self.listen_address = v;
        }
        if let Some(v) = lookup("THMDX_INDEX_PATH") {
            self.index_path = v.into();
        }
        if let Some(v) = lookup("THMDX_WORK_DIR") {
            self.work_dir = v.into();
        }
        if let Some(v) = lookup("THMDX_FEEDBACK_LOG_PATH") {
            self.feedback_log_path = v.into();
        }
        if let Some(v) = lookup("THMDX_DEFAULT_K") {
            self.default_k = parse_usize("THMDX_DEFAULT_K", v)?;
        }
        if let Some(v) = lookup("THMDX_MAX_K") {
            self.max_k = parse_usize("THMDX_MAX_K", v)?;
        }
        if let Some(v) = lookup("THMDX_CORS_ALLOWED_ORIGINS") {
            self.cors_allowed_origins = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        let bad = |m: String| Err(ServiceError::Config(m));
        if self.default_k < 1 || self.default_k > self.max_k {
            return bad(format!(
                "need 1 <= default_k ({}) <= max_k ({})",
                self.default_k, self.max_k
            ));
        }
        if self.max_k > MAX_K_LIMIT {
            return bad(format!(
                "max_k {} exceeds {MAX_K_LIMIT}; the candidate pool would be clamped at {}",
                self.max_k,
                candidate_pool_size(self.max_k).unwrap_or(MAX_POOL)
            ));
        }
        if self.max_in_flight == 0 || self.feedback_queue == 0 {
            return bad("max_in_flight and feedback_queue must be positive".into());
        }
        let check = |kind: ProviderKind, url: &str, what: &str| {
            if kind == ProviderKind::Http && url.trim().is_empty() {
                Err(ServiceError::Config(format!(
                    "{what}: http provider needs endpoint_url"
                )))
            } else {
                Ok(())
            }
        };
        check(
            self.embed_provider.kind,
            &self.embed_provider.endpoint_url,
            "embed_provider",
        )?;
        check(
            self.chat_provider.kind,
            &self.chat_provider.endpoint_url,
            "chat_provider",
        )?;
        if let Some(r) = &self.rerank_provider {
            check(r.kind, &r.endpoint_url, "rerank_provider")?;
        }
        self.embed_provider
            .provider_config()
            .validate()
            .map_err(ServiceError::Config)?;
        self.chat_provider
            .provider_config()
            .validate()
            .map_err(ServiceError::Config)?;
        self.hnsw
            .validate()
            .map_err(|e| ServiceError::Config(e.to_string()))?;
        Ok(())
    }
}

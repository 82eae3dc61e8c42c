//! JSON-over-HTTP provider clients.
//!
//! Request and response field names come from a wire profile; the defaults
//! follow the common chat-completions / embeddings / rerank API shapes.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::provider::{
    ChatProvider, ChatProviderConfig, ChatRequest, EmbedProvider, EmbedProviderConfig,
    ProviderError, RerankProvider, RerankProviderConfig,
};

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Clone)]
struct JsonClient {
    agent: ureq::Agent,
    url: String,
    api_key_env: String,
}

impl JsonClient {
    fn new(url: &str, api_key_env: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            url: url.to_string(),
            api_key_env: api_key_env.to_string(),
        }
    }

    /// Bearer token from the configured env var, if set.
    fn token(&self) -> Option<String> {
        if self.api_key_env.is_empty() {
            return None;
        }
        std::env::var(&self.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
    }

    fn post(&self, body: &Value) -> Result<Value, ProviderError> {
        let mut request = self.agent.post(&self.url);
        if let Some(token) = self.token() {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = request
            .send_json(body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ProviderError::Status { status, body: text });
        }
        serde_json::from_str(&text).map_err(|e| ProviderError::MalformedResponse(e.to_string()))
    }
}

fn malformed(what: &str) -> ProviderError {
    ProviderError::MalformedResponse(what.to_string())
}

/// Chat-completions client: `{model, messages, temperature, max_tokens}` in,
/// `choices[0].message.content` out.
pub struct HttpChatProvider {
    client: JsonClient,
}

impl HttpChatProvider {
    pub fn new(config: &ChatProviderConfig) -> Self {
        Self::with_timeout(config, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(config: &ChatProviderConfig, timeout: Duration) -> Self {
        Self {
            client: JsonClient::new(&config.endpoint_url, &config.api_key_env, timeout),
        }
    }
}

impl ChatProvider for HttpChatProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let body = json!({
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        });
        let response = self.client.post(&body)?;
        let content = response
            .pointer("/choices/0/message/content")
            .ok_or_else(|| malformed("missing choices[0].message.content"))?;
        match content {
            Value::String(s) => Ok(s.clone()),
            Value::Null => Err(ProviderError::EmptyCompletion),
            _ => Err(malformed("completion content is not a string")),
        }
    }
}

/// Field names of an embeddings endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedWireProfile {
    pub model_field: String,
    pub input_field: String,
    pub data_field: String,
    pub vector_field: String,
    /// Position field of each returned item; items are re-ordered by it when present.
    pub index_field: Option<String>,
}

impl Default for EmbedWireProfile {
    fn default() -> Self {
        Self {
            model_field: "model".into(),
            input_field: "input".into(),
            data_field: "data".into(),
            vector_field: "embedding".into(),
            index_field: Some("index".into()),
        }
    }
}

pub struct HttpEmbedProvider {
    client: JsonClient,
    model: String,
    profile: EmbedWireProfile,
}

impl HttpEmbedProvider {
    pub fn new(config: &EmbedProviderConfig, profile: EmbedWireProfile) -> Self {
        Self::with_timeout(config, profile, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(
        config: &EmbedProviderConfig,
        profile: EmbedWireProfile,
        timeout: Duration,
    ) -> Self {
        Self {
            client: JsonClient::new(&config.endpoint_url, &config.api_key_env, timeout),
            model: config.model_name.clone(),
            profile,
        }
    }
}

fn parse_vector(value: &Value) -> Result<Vec<f32>, ProviderError> {
    value
        .as_array()
        .ok_or_else(|| malformed("embedding is not an array"))?
        .iter()
        .map(|x| {
            x.as_f64()
                .map(|f| f as f32)
                .ok_or_else(|| malformed("non-numeric embedding value"))
        })
        .collect()
}

impl EmbedProvider for HttpEmbedProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        let mut body = Map::new();
        body.insert(self.profile.model_field.clone(), json!(self.model));
        body.insert(self.profile.input_field.clone(), json!(texts));
        let response = self.client.post(&Value::Object(body))?;
        let items = response
            .get(&self.profile.data_field)
            .and_then(Value::as_array)
            .ok_or_else(|| malformed("missing embedding list"))?;
        if items.len() != texts.len() {
            return Err(ProviderError::MalformedResponse(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                items.len()
            )));
        }
        let mut out: Vec<Option<Vec<f32>>> = vec![None; texts.len()];
        for (pos, item) in items.iter().enumerate() {
            let slot = match &self.profile.index_field {
                Some(field) => item
                    .get(field)
                    .and_then(Value::as_u64)
                    .map_or(pos, |i| i as usize),
                None => pos,
            };
            let vector = parse_vector(
                item.get(&self.profile.vector_field)
                    .ok_or_else(|| malformed("missing embedding field"))?,
            )?;
            match out.get_mut(slot) {
                Some(cell @ None) => *cell = Some(vector),
                _ => return Err(malformed("embedding index out of range or repeated")),
            }
        }
        Ok(out
            .into_iter()
            .map(|v| v.expect("all slots filled"))
            .collect())
    }
}

/// Field names of a rerank endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RerankWireProfile {
    pub model_field: String,
    pub query_field: String,
    pub documents_field: String,
    pub results_field: String,
    pub index_field: String,
    pub score_field: String,
}

impl Default for RerankWireProfile {
    fn default() -> Self {
        Self {
            model_field: "model".into(),
            query_field: "query".into(),
            documents_field: "documents".into(),
            results_field: "results".into(),
            index_field: "index".into(),
            score_field: "relevance_score".into(),
        }
    }
}

pub struct HttpRerankProvider {
    client: JsonClient,
    model: String,
    profile: RerankWireProfile,
}

impl HttpRerankProvider {
    pub fn new(config: &RerankProviderConfig, profile: RerankWireProfile) -> Self {
        Self::with_timeout(config, profile, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(
        config: &RerankProviderConfig,
        profile: RerankWireProfile,
        timeout: Duration,
    ) -> Self {
        Self {
            client: JsonClient::new(&config.endpoint_url, &config.api_key_env, timeout),
            model: config.model_name.clone(),
            profile,
        }
    }
}

impl RerankProvider for HttpRerankProvider {
    fn score(&self, query: &str, candidates: &[String]) -> Result<Vec<f32>, ProviderError> {
        let mut body = Map::new();
        body.insert(self.profile.model_field.clone(), json!(self.model));
        body.insert(self.profile.query_field.clone(), json!(query));
        body.insert(self.profile.documents_field.clone(), json!(candidates));
        let response = self.client.post(&Value::Object(body))?;
        let results = response
            .get(&self.profile.results_field)
            .and_then(Value::as_array)
            .ok_or_else(|| malformed("missing rerank results"))?;
        let mut scores: Vec<Option<f32>> = vec![None; candidates.len()];
        for item in results {
            let index = item
                .get(&self.profile.index_field)
                .and_then(Value::as_u64)
                .ok_or_else(|| malformed("missing rerank index"))? as usize;
            let score = item
                .get(&self.profile.score_field)
                .and_then(Value::as_f64)
                .ok_or_else(|| malformed("missing rerank score"))?;
            match scores.get_mut(index) {
                Some(cell) => *cell = Some(score as f32),
                None => return Err(malformed("rerank index out of range")),
            }
        }
        scores
            .into_iter()
            .map(|s| s.ok_or_else(|| malformed("candidate without a rerank score")))
            .collect()
    }
}

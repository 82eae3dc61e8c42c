use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::provider::{EmbedProvider, EmbedProviderConfig, ProviderError, RetryPolicy};
use super::EnrichError;

/// One slot of an `embed_batch` result.
pub type EmbedResult = Result<Vec<f32>, EnrichError>;

/// Sidecar line `{record_id, dim, values}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub record_id: String,
    pub dim: usize,
    pub values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(record_id: impl Into<String>, values: Vec<f32>) -> Self {
        Self {
            record_id: record_id.into(),
            dim: values.len(),
            values,
        }
    }
}

fn check_vector(values: Vec<f32>, dimension: usize) -> Result<Vec<f32>, EnrichError> {
    if values.len() != dimension {
        return Err(EnrichError::DimensionMismatch {
            expected: dimension,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(EnrichError::NonFiniteValue);
    }
    Ok(values)
}

/// Embed one text (instruction prefix already applied).
pub fn embed_text(
    provider: &dyn EmbedProvider,
    config: &EmbedProviderConfig,
    retry: RetryPolicy,
    text: &str,
) -> Result<Vec<f32>, EnrichError> {
    if text.is_empty() {
        return Err(EnrichError::EmptyText);
    }
    let input = [text.to_string()];
    let mut out = retry.run(|| provider.embed(&input))?;
    if out.len() != 1 {
        return Err(ProviderError::MalformedResponse(format!(
            "expected 1 vector, got {}",
            out.len()
        ))
        .into());
    }
    check_vector(out.pop().unwrap(), config.dimension)
}

#[derive(Debug, Clone, Copy)]
pub struct BatchOptions {
    /// Requests allowed in flight at once.
    pub max_in_flight: usize,
    /// Texts sent per request.
    pub chunk_size: usize,
    pub retry: RetryPolicy,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            max_in_flight: 8,
            chunk_size: 32,
            retry: RetryPolicy::default(),
        }
    }
}

/// Embed many texts; the result has one entry per input in input order.
/// A failing request is retried text by text so one bad input does not sink
/// its neighbours.
pub fn embed_batch(
    provider: &dyn EmbedProvider,
    config: &EmbedProviderConfig,
    texts: &[String],
    options: &BatchOptions,
) -> Vec<EmbedResult> {
    if texts.is_empty() {
        return Vec::new();
    }
    let chunk_size = options.chunk_size.max(1);
    let chunks: Vec<(usize, &[String])> = texts
        .chunks(chunk_size)
        .enumerate()
        .map(|(i, c)| (i * chunk_size, c))
        .collect();
    let slots: Mutex<Vec<Option<EmbedResult>>> =
        Mutex::new((0..texts.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = options.max_in_flight.max(1).min(chunks.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let n = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(offset, chunk)) = chunks.get(n) else {
                    break;
                };
                let results = embed_chunk(provider, config, options.retry, chunk);
                let mut slots = slots.lock().unwrap();
                for (i, r) in results.into_iter().enumerate() {
                    slots[offset + i] = Some(r);
                }
            });
        }
    });

    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every chunk is processed"))
        .collect()
}

fn embed_chunk(
    provider: &dyn EmbedProvider,
    config: &EmbedProviderConfig,
    retry: RetryPolicy,
    chunk: &[String],
) -> Vec<Result<Vec<f32>, EnrichError>> {
    if chunk.iter().any(String::is_empty) || chunk.len() == 1 {
        return chunk
            .iter()
            .map(|t| embed_text(provider, config, retry, t))
            .collect();
    }
    match retry.run(|| provider.embed(chunk)) {
        Ok(vectors) if vectors.len() == chunk.len() => vectors
            .into_iter()
            .map(|v| check_vector(v, config.dimension))
            .collect(),
        Ok(_) | Err(_) => chunk
            .iter()
            .map(|t| embed_text(provider, config, retry, t))
            .collect(),
    }
}

//! Deterministic offline providers.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::prompt::{BODY_FIELD, SUMMARY_FIELD};
use super::provider::{ChatProvider, ChatRequest, EmbedProvider, ProviderError, RerankProvider};

/// Answers with the first sentence of the `theorem_body` field, math
/// delimiters removed.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockChatProvider;

impl ChatProvider for MockChatProvider {
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let user = request.user.as_str();
        let body = user
            .find(BODY_FIELD)
            .map(|at| &user[at + BODY_FIELD.len()..])
            .unwrap_or(user);
        let body = match body.find(&format!("\n\n{SUMMARY_FIELD}")) {
            Some(end) => &body[..end],
            None => body,
        };
        Ok(mock_slogan(body))
    }
}

/// First sentence of `body` with `$`, `\(`, `\)`, `\[`, `\]` removed and
/// whitespace collapsed.
pub fn mock_slogan(body: &str) -> String {
    let stripped = body
        .replace("\\(", "")
        .replace("\\)", "")
        .replace("\\[", "")
        .replace("\\]", "")
        .replace('$', "");
    let text = crate::extract::collapse_whitespace(&stripped);
    let chars: Vec<char> = text.chars().collect();
    for (i, ch) in chars.iter().enumerate() {
        if matches!(ch, '.' | '!' | '?') && chars.get(i + 1).is_none_or(|c| c.is_whitespace()) {
            return chars[..=i].iter().collect();
        }
    }
    text
}

/// Replays canned responses in order; the last one repeats.
pub struct ScriptedChatProvider {
    script: Vec<Result<String, ProviderError>>,
    calls: AtomicUsize,
}

impl ScriptedChatProvider {
    pub fn new(script: Vec<Result<String, ProviderError>>) -> Self {
        assert!(!script.is_empty(), "script needs at least one response");
        Self {
            script,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ChatProvider for ScriptedChatProvider {
    fn complete(&self, _request: &ChatRequest) -> Result<String, ProviderError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        self.script[n.min(self.script.len() - 1)].clone()
    }
}

/// Seeded-hash pseudorandom unit vectors: SHA-256 of the text seeds a
/// ChaCha8 stream, coordinates are uniform on [-1, 1), then normalized.
/// Identical texts collide; distinct texts are nearly orthogonal.
#[derive(Debug, Default)]
pub struct MockEmbedProvider {
    dimension: usize,
    emit_dimension: Option<usize>,
    failing: HashSet<String>,
    calls: AtomicUsize,
}

impl MockEmbedProvider {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            ..Self::default()
        }
    }

    /// Return vectors of the wrong length.
    pub fn emitting_dimension(mut self, dimension: usize) -> Self {
        self.emit_dimension = Some(dimension);
        self
    }

    /// Fail any request containing `text`.
    pub fn failing_on(mut self, text: impl Into<String>) -> Self {
        self.failing.insert(text.into());
        self
    }

    /// Number of `embed` calls served.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

/// The mock embedding of `text` at `dimension`.
pub fn mock_embedding(text: &str, dimension: usize) -> Vec<f32> {
    let digest = Sha256::digest(text.as_bytes());
    let seed = u64::from_le_bytes(digest[..8].try_into().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..dimension)
        .map(|_| {
            let unit = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            unit * 2.0 - 1.0
        })
        .collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        let mut v = vec![0.0; dimension];
        if let Some(first) = v.first_mut() {
            *first = 1.0;
        }
        return v;
    }
    raw.iter().map(|x| (x / norm) as f32).collect()
}

impl EmbedProvider for MockEmbedProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(bad) = texts.iter().find(|t| self.failing.contains(*t)) {
            return Err(ProviderError::Status {
                status: 500,
                body: format!("injected failure for {bad:?}"),
            });
        }
        let dim = self.emit_dimension.unwrap_or(self.dimension);
        Ok(texts.iter().map(|t| mock_embedding(t, dim)).collect())
    }
}

/// Scores a pair by the negated absolute difference of character counts.
#[derive(Debug, Default)]
pub struct MockRerankProvider {
    fail: bool,
    calls: Mutex<Vec<usize>>,
}

impl MockRerankProvider {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every call fails as a timeout would.
    pub fn failing() -> Self {
        Self {
            fail: true,
            ..Self::default()
        }
    }

    /// Candidate counts of each call so far.
    pub fn call_sizes(&self) -> Vec<usize> {
        self.calls.lock().unwrap().clone()
    }
}

pub fn mock_rerank_score(query: &str, candidate: &str) -> f32 {
    let q = query.chars().count() as i64;
    let c = candidate.chars().count() as i64;
    -((q - c).abs() as f32)
}

impl RerankProvider for MockRerankProvider {
    fn score(&self, query: &str, candidates: &[String]) -> Result<Vec<f32>, ProviderError> {
        self.calls.lock().unwrap().push(candidates.len());
        if self.fail {
            return Err(ProviderError::Transport("timed out".into()));
        }
        Ok(candidates
            .iter()
            .map(|c| mock_rerank_score(query, c))
            .collect())
    }
}

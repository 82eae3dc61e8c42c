use serde::{Deserialize, Serialize};

use super::prompt::{SloganPrompt, SloganStrategy};
use super::provider::{ChatProvider, ChatProviderConfig, ChatRequest, ProviderError, RetryPolicy};
use super::EnrichError;

/// Sidecar line `{record_id, strategy, text}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slogan {
    pub record_id: String,
    pub strategy: SloganStrategy,
    pub text: String,
}

/// Ask the chat model for a slogan. Non-ASCII output and transport errors
/// are retried per `retry`; an empty completion is not.
pub fn generate_slogan(
    provider: &dyn ChatProvider,
    config: &ChatProviderConfig,
    retry: RetryPolicy,
    record_id: &str,
    strategy: SloganStrategy,
    prompt: &SloganPrompt,
) -> Result<Slogan, EnrichError> {
    let request = ChatRequest {
        model: config.model_name.clone(),
        system: prompt.system.clone(),
        user: prompt.user.clone(),
        temperature: config.temperature,
        max_output_tokens: config.max_output_tokens,
    };
    let mut attempt = 0;
    loop {
        let completion = retry.run(|| provider.complete(&request))?;
        let text = completion.trim_end();
        if text.trim_start().is_empty() {
            return Err(ProviderError::EmptyCompletion.into());
        }
        if text.is_ascii() {
            return Ok(Slogan {
                record_id: record_id.to_string(),
                strategy,
                text: text.to_string(),
            });
        }
        if attempt >= retry.retries {
            return Err(EnrichError::NonAsciiOutput {
                record_id: record_id.to_string(),
            });
        }
        attempt += 1;
        tracing::debug!(record_id, attempt, "non-ASCII slogan, retrying");
        retry.sleep_before(attempt);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enrich::mock::{MockChatProvider, ScriptedChatProvider};
    use crate::enrich::prompt::build_slogan_prompt;

    fn config() -> ChatProviderConfig {
        ChatProviderConfig::new("mock://chat", "mock")
    }

    fn prompt(body: &str) -> SloganPrompt {
        build_slogan_prompt(SloganStrategy::BodyOnly, body, None, None).unwrap()
    }

    #[test]
    fn mock_slogan_is_first_sentence() {
        let s = generate_slogan(
            &MockChatProvider,
            &config(),
            RetryPolicy::immediate(1),
            "r1",
            SloganStrategy::BodyOnly,
            &prompt("Every group of prime order is cyclic."),
        )
        .unwrap();
        assert_eq!(s.text, "Every group of prime order is cyclic.");
        assert_eq!(s.record_id, "r1");
    }

    #[test]
    fn non_ascii_after_retry_is_an_error() {
        let provider = ScriptedChatProvider::new(vec![Ok("Théorème".into())]);
        let err = generate_slogan(
            &provider,
            &config(),
            RetryPolicy::immediate(1),
            "r1",
            SloganStrategy::BodyOnly,
            &prompt("x"),
        )
        .unwrap_err();
        assert!(matches!(err, EnrichError::NonAsciiOutput { .. }));
        assert_eq!(provider.calls(), 2);
    }

    #[test]
    fn non_ascii_then_ascii_recovers() {
        let provider =
            ScriptedChatProvider::new(vec![Ok("Théorème".into()), Ok("A fine slogan.  \n".into())]);
        let s = generate_slogan(
            &provider,
            &config(),
            RetryPolicy::immediate(1),
            "r",
            SloganStrategy::BodyOnly,
            &prompt("x"),
        )
        .unwrap();
        assert_eq!(s.text, "A fine slogan.");
    }

    #[test]
    fn empty_completion() {
        let provider = ScriptedChatProvider::new(vec![Ok("   \n".into())]);
        let err = generate_slogan(
            &provider,
            &config(),
            RetryPolicy::immediate(1),
            "r",
            SloganStrategy::BodyOnly,
            &prompt("x"),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            EnrichError::Provider(ProviderError::EmptyCompletion)
        ));
        assert_eq!(provider.calls(), 1);
    }

    #[test]
    fn transport_error_retried_then_surfaced() {
        let provider =
            ScriptedChatProvider::new(vec![Err(ProviderError::Transport("reset".into()))]);
        let err = generate_slogan(
            &provider,
            &config(),
            RetryPolicy::immediate(1),
            "r",
            SloganStrategy::BodyOnly,
            &prompt("x"),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            EnrichError::Provider(ProviderError::Transport(_))
        ));
        assert_eq!(provider.calls(), 2);
    }
}

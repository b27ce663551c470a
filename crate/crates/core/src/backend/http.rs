use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{BackendConfig, BackendError, ChatBackend, CompletionResult};
use crate::prompt::{ChatMessage, Transcript};

/// Environment variable holding the bearer token for HTTP endpoints.
pub const API_KEY_ENV: &str = "SKILLBENCH_API_KEY";

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// OpenAI-compatible chat-completions client.
///
/// Sends only `model` and `messages`; decoding parameters are left to the
/// server's defaults.
pub struct HttpBackend {
    config: BackendConfig,
    url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_api_key(config, api_key)
    }

    pub fn with_api_key(config: BackendConfig, api_key: Option<String>) -> Result<Self, BackendError> {
        config.validate()?;
        let endpoint = config.endpoint.clone().unwrap_or_default();
        let url = format!("{}/chat/completions", endpoint.trim_end_matches('/'));
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.request_timeout))
            .build()
            .map_err(|e| BackendError::InvalidConfig(e.to_string()))?;
        Ok(Self {
            config,
            url,
            api_key,
            client,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl ChatBackend for HttpBackend {
    fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn complete(&self, t: &Transcript) -> Result<CompletionResult, BackendError> {
        self.config.check_context(t)?;
        let body = ChatRequest {
            model: &self.config.model_id,
            messages: t.messages(),
        };
        let mut request = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }

        let started = Instant::now();
        let response = request.send().map_err(|e| BackendError::TransportError {
            status: e.status().map(|s| s.as_u16()),
            reason: e.to_string(),
        })?;
        let status = response.status();
        if !status.is_success() {
            let reason = response
                .text()
                .ok()
                .filter(|t| !t.is_empty())
                .unwrap_or_else(|| status.canonical_reason().unwrap_or("request failed").to_string());
            return Err(BackendError::TransportError {
                status: Some(status.as_u16()),
                reason,
            });
        }
        let parsed: ChatResponse = response.json().map_err(|e| BackendError::TransportError {
            status: Some(status.as_u16()),
            reason: format!("malformed completion body: {e}"),
        })?;
        let latency = started.elapsed().as_secs_f64();

        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::TransportError {
                status: Some(status.as_u16()),
                reason: "response has no choices[0].message.content".into(),
            })?;
        let usage = parsed.usage.unwrap_or(Usage {
            prompt_tokens: 0,
            completion_tokens: 0,
        });
        Ok(CompletionResult {
            text,
            latency,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
        })
    }
}

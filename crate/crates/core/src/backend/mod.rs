//! Chat-completion backends behind one interface.
//!
//! - [`HttpBackend`]: any OpenAI-compatible `/chat/completions` endpoint.
//! - [`MockBackend`]: replays a fixed script, for golden tests.
//! - [`HeuristicBackend`]: word-overlap routing and cue-word labelling, for
//!   offline end-to-end runs. It is a stand-in, not a model.

mod heuristic;
mod http;
mod mock;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::Transcript;

pub use heuristic::{heuristic_select, jaccard_counts, word_set, HeuristicBackend, NEGATIVE_CUES, POSITIVE_CUES};
pub use http::{HttpBackend, API_KEY_ENV};
pub use mock::{MockBackend, ScriptedReply, ScriptedResponses};

pub const DEFAULT_CONTEXT_LIMIT: usize = 10_240;
pub const DEFAULT_TIMEOUT_SECS: f64 = 120.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("prompt too long: estimated {estimated} tokens, limit {limit}")]
    ContextOverflow { estimated: usize, limit: usize },
    #[error("transport error{}: {reason}", .status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    TransportError { status: Option<u16>, reason: String },
    #[error("mock script exhausted after {0} replies")]
    ScriptExhausted(usize),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Mock,
    Heuristic,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Http => "http",
            BackendKind::Mock => "mock",
            BackendKind::Heuristic => "heuristic",
        })
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "http" => Ok(BackendKind::Http),
            "mock" => Ok(BackendKind::Mock),
            "heuristic" => Ok(BackendKind::Heuristic),
            other => Err(format!("unknown backend `{other}` (expected http, mock or heuristic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Base URL; `/chat/completions` is appended. Required for `http`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model_id: String,
    #[serde(default = "default_context_limit")]
    pub context_limit_tokens: usize,
    #[serde(default = "default_timeout")]
    pub request_timeout: f64,
    /// Static VRAM footprint of the served model, in GB.
    #[serde(default)]
    pub vram_gb: f64,
}

fn default_context_limit() -> usize {
    DEFAULT_CONTEXT_LIMIT
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_SECS
}

impl BackendConfig {
    pub fn new(kind: BackendKind) -> Self {
        Self {
            kind,
            endpoint: None,
            model_id: String::new(),
            context_limit_tokens: DEFAULT_CONTEXT_LIMIT,
            request_timeout: DEFAULT_TIMEOUT_SECS,
            vram_gb: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.context_limit_tokens == 0 {
            return Err(BackendError::InvalidConfig("context_limit_tokens must be > 0".into()));
        }
        if !(self.vram_gb >= 0.0 && self.vram_gb.is_finite()) {
            return Err(BackendError::InvalidConfig(
                "vram_gb must be a finite value >= 0".into(),
            ));
        }
        if !(self.request_timeout > 0.0 && self.request_timeout.is_finite()) {
            return Err(BackendError::InvalidConfig("request_timeout must be > 0".into()));
        }
        if self.kind == BackendKind::Http && self.endpoint.as_deref().is_none_or(str::is_empty) {
            return Err(BackendError::InvalidConfig("http backend requires an endpoint".into()));
        }
        Ok(())
    }

    /// Rejects transcripts whose estimated size exceeds the context limit.
    pub fn check_context(&self, t: &Transcript) -> Result<usize, BackendError> {
        let estimated = estimate_tokens(t);
        if estimated > self.context_limit_tokens {
            return Err(BackendError::ContextOverflow {
                estimated,
                limit: self.context_limit_tokens,
            });
        }
        Ok(estimated)
    }
}

/// VRAM footprints (GB) of the evaluated open-weight models.
pub const MODEL_VRAM_GB: &[(&str, f64)] = &[
    ("gemma-3-270m-it", 1.0),
    ("gemma-3-4b-it", 10.0),
    ("gemma-3-12b-it", 29.0),
    ("qwen3-30b-instruct", 72.0),
    ("qwen3-80b-instruct", 192.0),
    ("qwen3-80b-thinking", 192.0),
    ("qwen3-80b-coder", 192.0),
];

/// Looks up a default VRAM footprint by case-insensitive model id.
pub fn default_vram_gb(model_id: &str) -> Option<f64> {
    let id = model_id.to_ascii_lowercase();
    MODEL_VRAM_GB.iter().find(|(m, _)| *m == id).map(|(_, v)| *v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    /// Wall-clock seconds.
    pub latency: f64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// A chat-completion provider. Implementations must not mutate the transcript.
pub trait ChatBackend: Send + Sync {
    fn config(&self) -> &BackendConfig;

    fn complete(&self, t: &Transcript) -> Result<CompletionResult, BackendError>;
}

/// Token estimate used only for the context guard: ceil(chars / 4).
pub fn estimate_tokens(t: &Transcript) -> usize {
    t.content_chars().div_ceil(4)
}

/// Builds the backend named by `config`. `script` is required for `mock`.
pub fn build_backend(
    config: BackendConfig,
    script: Option<ScriptedResponses>,
) -> Result<Box<dyn ChatBackend>, BackendError> {
    config.validate()?;
    Ok(match config.kind {
        BackendKind::Http => Box::new(HttpBackend::new(config)?),
        BackendKind::Heuristic => Box::new(HeuristicBackend::new(config)),
        BackendKind::Mock => {
            let script = script.ok_or_else(|| BackendError::InvalidConfig("mock backend requires a script".into()))?;
            Box::new(MockBackend::new(config, script))
        }
    })
}

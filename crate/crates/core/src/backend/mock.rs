use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::{BackendConfig, BackendError, ChatBackend, CompletionResult};
use crate::prompt::Transcript;

/// One canned reply. In script files a bare string means zero latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptedReply {
    Text(String),
    Timed {
        text: String,
        #[serde(default)]
        latency: f64,
    },
}

impl ScriptedReply {
    pub fn text(&self) -> &str {
        match self {
            ScriptedReply::Text(t) | ScriptedReply::Timed { text: t, .. } => t,
        }
    }

    pub fn latency(&self) -> f64 {
        match self {
            ScriptedReply::Text(_) => 0.0,
            ScriptedReply::Timed { latency, .. } => latency.max(0.0),
        }
    }
}

/// An ordered list of replies with an atomically advanced cursor.
#[derive(Debug, Default)]
pub struct ScriptedResponses {
    replies: Vec<ScriptedReply>,
    cursor: AtomicUsize,
}

impl Clone for ScriptedResponses {
    fn clone(&self) -> Self {
        Self {
            replies: self.replies.clone(),
            cursor: AtomicUsize::new(self.cursor()),
        }
    }
}

impl ScriptedResponses {
    pub fn new(replies: Vec<ScriptedReply>) -> Self {
        Self {
            replies,
            cursor: AtomicUsize::new(0),
        }
    }

    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(texts.into_iter().map(|t| ScriptedReply::Text(t.into())).collect())
    }

    /// Parses a JSON array of strings or `{"text", "latency"}` objects.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(text)?))
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }

    pub fn cursor(&self) -> usize {
        self.cursor.load(Ordering::SeqCst).min(self.replies.len())
    }

    fn next(&self) -> Option<&ScriptedReply> {
        let len = self.replies.len();
        self.cursor
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |c| (c < len).then_some(c + 1))
            .ok()
            .map(|i| &self.replies[i])
    }
}

pub struct MockBackend {
    config: BackendConfig,
    script: ScriptedResponses,
}

impl MockBackend {
    pub fn new(config: BackendConfig, script: ScriptedResponses) -> Self {
        Self { config, script }
    }

    pub fn script(&self) -> &ScriptedResponses {
        &self.script
    }
}

impl ChatBackend for MockBackend {
    fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn complete(&self, t: &Transcript) -> Result<CompletionResult, BackendError> {
        self.config.check_context(t)?;
        let reply = self
            .script
            .next()
            .ok_or(BackendError::ScriptExhausted(self.script.len()))?;
        Ok(CompletionResult {
            text: reply.text().to_string(),
            latency: reply.latency(),
            prompt_tokens: 0,
            completion_tokens: 0,
        })
    }
}

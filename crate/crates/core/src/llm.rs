//! Minimal text-completion contract for language-model backends.
//!
//! A backend receives prompt text plus optional view attachments and returns
//! reply text. [`HttpBackend`] speaks the OpenAI-compatible
//! `/chat/completions` protocol; [`ScriptedBackend`] replays canned replies
//! for tests and offline runs.

use std::collections::VecDeque;
use std::env;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend transport failure: {0}")]
    Transport(String),
    #[error("backend returned an unexpected payload: {0}")]
    Payload(String),
    #[error("backend not configured: {0}")]
    NotConfigured(String),
    #[error("scripted backend exhausted")]
    Exhausted,
}

/// One view image handed to a multimodal backend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub label: String,
    /// URL or data URI understood by the backend.
    pub uri: String,
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, prompt: &str, attachments: &[Attachment]) -> Result<String, BackendError>;
}

/// Endpoint settings, loadable from config files or the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmSettings {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Name of the environment variable holding the API key, if any.
    #[serde(default)]
    pub api_key_env: Option<String>,
}

fn default_timeout() -> u64 {
    60
}

impl LlmSettings {
    pub const ENDPOINT_VAR: &'static str = "AERIALNAV_LLM_ENDPOINT";
    pub const MODEL_VAR: &'static str = "AERIALNAV_LLM_MODEL";
    pub const TIMEOUT_VAR: &'static str = "AERIALNAV_LLM_TIMEOUT";
    pub const KEY_VAR: &'static str = "AERIALNAV_LLM_API_KEY";

    /// Reads settings from `AERIALNAV_LLM_*` variables; `None` when no
    /// endpoint is set.
    pub fn from_env() -> Option<Self> {
        let endpoint = env::var(Self::ENDPOINT_VAR)
            .ok()
            .filter(|e| !e.is_empty())?;
        let model = env::var(Self::MODEL_VAR).unwrap_or_else(|_| "default".to_string());
        let timeout_secs = env::var(Self::TIMEOUT_VAR)
            .ok()
            .and_then(|t| t.parse().ok())
            .unwrap_or_else(default_timeout);
        Some(Self {
            endpoint,
            model,
            timeout_secs,
            api_key_env: Some(Self::KEY_VAR.to_string()),
        })
    }
}

pub struct HttpBackend {
    settings: LlmSettings,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(settings: LlmSettings) -> Result<Self, BackendError> {
        if settings.endpoint.trim().is_empty() {
            return Err(BackendError::NotConfigured("empty endpoint".into()));
        }
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(settings.timeout_secs.max(1))))
            .http_status_as_error(true)
            .build();
        Ok(Self {
            settings,
            agent: config.into(),
        })
    }

    fn url(&self) -> String {
        let base = self.settings.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, prompt: &str, attachments: &[Attachment]) -> Result<String, BackendError> {
        let content = if attachments.is_empty() {
            Value::String(prompt.to_string())
        } else {
            let mut parts = vec![json!({"type": "text", "text": prompt})];
            for a in attachments {
                parts.push(json!({"type": "text", "text": format!("{}:", a.label)}));
                parts.push(json!({"type": "image_url", "image_url": {"url": a.uri}}));
            }
            Value::Array(parts)
        };
        let body = json!({
            "model": self.settings.model,
            "messages": [{"role": "user", "content": content}],
            "temperature": 0,
        });
        let mut request = self
            .agent
            .post(&self.url())
            .header("Content-Type", "application/json");
        if let Some(key) = self
            .settings
            .api_key_env
            .as_deref()
            .and_then(|var| env::var(var).ok())
        {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send(body.to_string())
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let reply: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Payload(e.to_string()))?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Payload("missing choices[0].message.content".into()))
    }
}

/// Replays a fixed queue of replies and records every prompt it receives.
#[derive(Default)]
pub struct ScriptedBackend {
    replies: Mutex<VecDeque<Result<String, String>>>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            replies: Mutex::new(replies.into_iter().map(|r| Ok(r.into())).collect()),
            prompts: Mutex::new(Vec::new()),
        }
    }

    /// Queues a transport failure.
    pub fn push_failure(&self, message: &str) {
        self.replies
            .lock()
            .unwrap()
            .push_back(Err(message.to_string()));
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }
}

impl LlmBackend for ScriptedBackend {
    fn complete(&self, prompt: &str, _attachments: &[Attachment]) -> Result<String, BackendError> {
        self.prompts.lock().unwrap().push(prompt.to_string());
        match self.replies.lock().unwrap().pop_front() {
            Some(Ok(reply)) => Ok(reply),
            Some(Err(message)) => Err(BackendError::Transport(message)),
            None => Err(BackendError::Exhausted),
        }
    }
}

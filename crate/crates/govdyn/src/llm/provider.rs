use std::collections::BTreeMap;
use std::time::Duration;

use govdyn_core::Action;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// One call to a chat model.
#[derive(Debug, Clone, Copy)]
pub struct ChatRequest<'a> {
    pub agent: &'a str,
    /// Zero-based repetition index.
    pub repetition: usize,
    /// One-based round.
    pub round: u32,
    pub prompt: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("unexpected response body: {0}")]
    BadResponse(String),
    #[error("environment variable {0} holding the API key is not set")]
    MissingCredentials(String),
    #[error("script error: {0}")]
    Script(String),
}

impl ProviderError {
    fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) => true,
            ProviderError::Status { code, .. } => *code == 429 || *code >= 500,
            _ => false,
        }
    }
}

pub trait Provider: Send + Sync {
    fn model_name(&self) -> &str;
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, ProviderError>;
}

/// A scripted reply: an action, answered with its label, or raw text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptedReply {
    Action(Action),
    Text { text: String },
}

fn default_scripted_name() -> String {
    "scripted".into()
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    2
}

fn default_backoff() -> u64 {
    500
}

/// Settings of an OpenAI-compatible chat completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteChatSpec {
    pub model_name: String,
    /// Full URL of the chat completions route.
    pub endpoint: String,
    /// Environment variable holding a bearer token. No auth header when absent.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// First backoff delay; doubles after every failed attempt.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default)]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderSpec {
    Scripted {
        #[serde(default = "default_scripted_name")]
        model_name: String,
        /// Replies per agent name, consumed in call order and cycled.
        script: BTreeMap<String, Vec<ScriptedReply>>,
    },
    RemoteChat(RemoteChatSpec),
}

impl ProviderSpec {
    pub fn model_name(&self) -> &str {
        match self {
            ProviderSpec::Scripted { model_name, .. } => model_name,
            ProviderSpec::RemoteChat(s) => &s.model_name,
        }
    }

    /// Scripted spec giving every listed agent the same fixed sequence.
    pub fn scripted_uniform(agents: &[String], replies: Vec<ScriptedReply>) -> Self {
        ProviderSpec::Scripted {
            model_name: default_scripted_name(),
            script: agents.iter().map(|a| (a.clone(), replies.clone())).collect(),
        }
    }
}

/// Deterministic provider. Call `(repetition, round)` of an agent reads entry
/// `repetition * n_rounds + round - 1` of its script, modulo the script length.
#[derive(Debug, Clone)]
pub struct ScriptedProvider {
    pub model_name: String,
    pub script: BTreeMap<String, Vec<ScriptedReply>>,
    pub labels: [String; 2],
    pub first: Action,
    pub n_rounds: u32,
}

impl Provider for ScriptedProvider {
    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn complete(&self, req: &ChatRequest<'_>) -> Result<String, ProviderError> {
        let seq = self
            .script
            .get(req.agent)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| ProviderError::Script(format!("no replies scripted for {}", req.agent)))?;
        let k = req.repetition * self.n_rounds as usize + (req.round as usize - 1);
        Ok(match &seq[k % seq.len()] {
            ScriptedReply::Action(a) if *a == self.first => self.labels[0].clone(),
            ScriptedReply::Action(_) => self.labels[1].clone(),
            ScriptedReply::Text { text } => text.clone(),
        })
    }
}

/// Client for an OpenAI-compatible chat completions API.
pub struct RemoteChatProvider {
    spec: RemoteChatSpec,
    agent: ureq::Agent,
}

impl RemoteChatProvider {
    pub fn new(spec: RemoteChatSpec) -> Self {
        let timeout = Duration::from_secs_f64(spec.timeout_secs.max(0.001));
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        RemoteChatProvider { spec, agent }
    }

    fn attempt(&self, prompt: &str) -> Result<String, ProviderError> {
        let mut body = json!({
            "model": self.spec.model_name,
            "messages": [{ "role": "user", "content": prompt }],
        });
        if let Some(t) = self.spec.temperature {
            body["temperature"] = json!(t);
        }
        let mut req = self.agent.post(&self.spec.endpoint);
        if let Some(var) = &self.spec.api_key_env {
            let key = std::env::var(var).map_err(|_| ProviderError::MissingCredentials(var.clone()))?;
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| ProviderError::Transport(e.to_string()))?;
        let code = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&code) {
            return Err(ProviderError::Status { code, body: text });
        }
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or(ProviderError::BadResponse(text))
    }
}

impl Provider for RemoteChatProvider {
    fn model_name(&self) -> &str {
        &self.spec.model_name
    }

    fn complete(&self, req: &ChatRequest<'_>) -> Result<String, ProviderError> {
        let mut delay = self.spec.backoff_ms;
        let mut attempt = 0;
        loop {
            match self.attempt(req.prompt) {
                Err(e) if e.is_retryable() && attempt < self.spec.retries => {
                    std::thread::sleep(Duration::from_millis(delay));
                    delay = delay.saturating_mul(2);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

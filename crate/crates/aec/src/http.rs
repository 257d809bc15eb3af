//! OpenAI-compatible chat-completions backend.

use std::thread;
use std::time::Duration;

use aec_core::agents::{BackendError, ChatBackend, Prompt, Sampling};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::BackendConfig;

#[derive(Debug, Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Debug, Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

#[derive(Debug, Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    temperature: f64,
    retrieval_temperature: f64,
    max_tokens: u32,
    retries: u32,
    backoff: Duration,
    api_key: Option<String>,
}

impl HttpBackend {
    /// Build a backend. The credential variable is read here, so a missing
    /// credential fails before any request is made.
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        Self::with_env(config, |name| std::env::var(name).ok())
    }

    pub fn with_env(config: &BackendConfig, env: impl Fn(&str) -> Option<String>) -> Result<Self, BackendError> {
        let endpoint = config
            .endpoint
            .clone()
            .ok_or_else(|| BackendError::Config("no backend endpoint configured".into()))?;
        let model = config
            .model
            .clone()
            .ok_or_else(|| BackendError::Config("no model configured".into()))?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                env(var)
                    .filter(|v| !v.is_empty())
                    .ok_or_else(|| BackendError::MissingCredential(var.clone()))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self {
            client,
            endpoint,
            model,
            temperature: config.temperature,
            retrieval_temperature: config.retrieval_temperature,
            max_tokens: config.max_tokens,
            retries: config.retries,
            backoff: Duration::from_millis(config.retry_backoff_ms),
            api_key,
        })
    }

    fn request_body(&self, prompt: &Prompt) -> serde_json::Value {
        let temperature = match prompt.sampling {
            Sampling::Deterministic => self.temperature,
            Sampling::Diverse => self.retrieval_temperature,
        };
        let messages: Vec<WireMessage<'_>> = prompt
            .messages
            .iter()
            .map(|m| WireMessage {
                role: m.role.as_str(),
                content: &m.content,
            })
            .collect();
        json!({
            "model": self.model,
            "messages": messages,
            "temperature": temperature,
            "max_tokens": self.max_tokens,
        })
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, (BackendError, bool)> {
        let mut request = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| (BackendError::Transport(e.to_string()), true))?;
        let status = response.status();
        if !status.is_success() {
            let retryable = status.as_u16() == 429 || status.is_server_error();
            let body = response.text().unwrap_or_default();
            return Err((
                BackendError::Status {
                    status: status.as_u16(),
                    body,
                },
                retryable,
            ));
        }
        let completion: Completion = response
            .json()
            .map_err(|e| (BackendError::Transport(format!("malformed response: {e}")), false))?;
        completion
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or((BackendError::MissingContent, false))
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, prompt: &Prompt) -> Result<String, BackendError> {
        let body = self.request_body(prompt);
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(content) => return Ok(content),
                Err((error, retryable)) if retryable && attempt < self.retries => {
                    log::warn!("request failed ({error}); retrying");
                    thread::sleep(self.backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                Err((error, _)) => return Err(error),
            }
        }
    }
}

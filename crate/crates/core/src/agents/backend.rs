use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::prompts::TemplateId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

impl ChatRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ChatRole::System => "system",
            ChatRole::User => "user",
            ChatRole::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::Assistant,
            content: content.into(),
        }
    }
}

/// How the backend should sample a reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Planning, coding and judging: the backend's base temperature (0 by default).
    Deterministic,
    /// Exemplar generation: the backend's positive retrieval temperature.
    Diverse,
}

/// A fully assembled request. The messages are a pure function of
/// `(template, bindings)`; the fingerprint keys scripted replies on that pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    pub template: TemplateId,
    pub bindings: Vec<(&'static str, String)>,
    pub messages: Vec<ChatMessage>,
    pub sampling: Sampling,
}

impl Prompt {
    pub fn binding(&self, name: &str) -> Option<&str> {
        self.bindings.iter().find(|(k, _)| *k == name).map(|(_, v)| v.as_str())
    }

    /// `<template id>:<hex SHA-256 of the bindings>`.
    pub fn fingerprint(&self) -> String {
        fingerprint(self.template, &self.bindings)
    }
}

/// Bindings are hashed as `name NUL len(value) value` in order, with the
/// length as a little-endian u64, so no two binding lists collide by
/// concatenation.
pub fn fingerprint(template: TemplateId, bindings: &[(&str, String)]) -> String {
    let mut hasher = Sha256::new();
    for (name, value) in bindings {
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        hasher.update((value.len() as u64).to_le_bytes());
        hasher.update(value.as_bytes());
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(template.as_str().len() + 65);
    out.push_str(template.as_str());
    out.push(':');
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("credential variable `{0}` is not set")]
    MissingCredential(String),
    #[error("response has no message content")]
    MissingContent,
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error("no scripted reply for {template} prompt `{fingerprint}`")]
    Unscripted { template: String, fingerprint: String },
}

/// A chat model. Implementations used by concurrent pipeline workers must
/// also be `Sync`.
pub trait ChatBackend {
    fn complete(&self, prompt: &Prompt) -> Result<String, BackendError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(&self, prompt: &Prompt) -> Result<String, BackendError> {
        (**self).complete(prompt)
    }
}

/// Deterministic backend mapping prompt fingerprints to canned replies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScriptedBackend {
    replies: BTreeMap<String, String>,
}

impl ScriptedBackend {
    pub fn new(replies: BTreeMap<String, String>) -> Self {
        Self { replies }
    }

    pub fn with_reply(mut self, fingerprint: impl Into<String>, reply: impl Into<String>) -> Self {
        self.replies.insert(fingerprint.into(), reply.into());
        self
    }

    pub fn replies(&self) -> &BTreeMap<String, String> {
        &self.replies
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, prompt: &Prompt) -> Result<String, BackendError> {
        let fp = prompt.fingerprint();
        self.replies.get(&fp).cloned().ok_or_else(|| BackendError::Unscripted {
            template: String::from(prompt.template.as_str()),
            fingerprint: fp,
        })
    }
}

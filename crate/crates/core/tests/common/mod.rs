#![allow(dead_code)]

use std::cell::RefCell;
use std::collections::VecDeque;

use aec_core::agents::{BackendError, ChatBackend, Prompt};
use aec_core::schema::{parse_schema_code, SchemaRegistry};

pub const PATCH_SCHEMA: &str = "@dataclass\nclass PatchVulnerability:\n    mention: str\n    patch: List\n    cve: List\n    time: List\n    vulnerable_system: List";
pub const PATCH_TEXT: &str = "On Tuesday the company patched a vulnerability in its web server.";
pub const BAD_PATCH: &str = r#"PatchVulnerability(mention="patched", vulnerable_system=[1234])"#;
pub const GOOD_PATCH: &str =
    r#"PatchVulnerability(mention="patched", time=["Tuesday"], vulnerable_system=["web server"])"#;

pub fn patch_registry() -> SchemaRegistry {
    SchemaRegistry::new(vec![parse_schema_code(PATCH_SCHEMA).unwrap()]).unwrap()
}

/// Answers prompts in call order and records every prompt it receives.
#[derive(Default)]
pub struct QueueBackend {
    replies: RefCell<VecDeque<String>>,
    pub prompts: RefCell<Vec<Prompt>>,
}

impl QueueBackend {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self {
            replies: RefCell::new(replies.into_iter().map(Into::into).collect()),
            prompts: RefCell::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> usize {
        self.prompts.borrow().len()
    }
}

impl ChatBackend for QueueBackend {
    fn complete(&self, prompt: &Prompt) -> Result<String, BackendError> {
        self.prompts.borrow_mut().push(prompt.clone());
        self.replies
            .borrow_mut()
            .pop_front()
            .ok_or_else(|| BackendError::Unscripted {
                template: prompt.template.to_string(),
                fingerprint: prompt.fingerprint(),
            })
    }
}

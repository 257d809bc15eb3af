//! Prompt catalog. Every prompt is rebuilt from a template id plus its
//! bindings; tests and scripted fixtures depend on the exact wording.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::backend::{ChatMessage, Prompt, Sampling};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateId {
    Retrieval,
    Planning,
    PlanningRetry,
    Coding,
    CodingPatch,
    SemanticJudge,
}

impl TemplateId {
    pub const ALL: [TemplateId; 6] = [
        TemplateId::Retrieval,
        TemplateId::Planning,
        TemplateId::PlanningRetry,
        TemplateId::Coding,
        TemplateId::CodingPatch,
        TemplateId::SemanticJudge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Retrieval => "retrieval",
            TemplateId::Planning => "planning",
            TemplateId::PlanningRetry => "planning-retry",
            TemplateId::Coding => "coding",
            TemplateId::CodingPatch => "coding-patch",
            TemplateId::SemanticJudge => "semantic-judge",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == name)
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const RETRIEVAL_SYSTEM: &str = "You are a helpful example generator for event extraction.";

pub const PLANNING_SYSTEM: &str = "You are an assistant for event extraction. Given a piece \
of text and definitions of event types (as Python dataclasses), produce a JSON array of \
objects where each object has keys 'trigger' and 'event_type'. Each object may also carry \
a 'confidence' between 0 and 1 and a short 'rationale'.";

pub const PLANNING_INSTRUCTION: &str = "Return a JSON array of {'trigger': str, 'event_type': str} objects.";

pub const PLANNING_REMINDER: &str = "Your previous reply could not be parsed. Reply with only \
a JSON array of {'trigger': str, 'event_type': str} objects and nothing else.";

pub const CODING_SYSTEM: &str = "You are a coding agent that creates event objects based on \
a trigger hypothesis. Given an event definition, a trigger word, and the original text, \
output Python code that instantiates the event class with the appropriate arguments, as a \
single constructor call such as Type(mention=\"...\", role=[\"...\"]). Pass the trigger as \
`mention`, copy argument values from the text, and use an empty list for roles the text \
does not fill. Output only the code.";

pub const JUDGE_SYSTEM: &str = "You are a verifier for event extraction. Answer with a \
single word: yes or no.";

/// Bindings for the retrieval prompt. `sample` distinguishes the k
/// independent requests issued for one schema.
pub fn retrieval(event_type: &str, roles: &[&str], sample: usize) -> Prompt {
    let roles = if roles.is_empty() {
        "(none)".to_string()
    } else {
        roles.join(", ")
    };
    let user = format!(
        "Event type: {event_type}\nRoles: {roles}\nWrite one English sentence that contains a clear mention of the {event_type} trigger and populates all roles."
    );
    Prompt {
        template: TemplateId::Retrieval,
        bindings: vec![
            ("event_type", event_type.to_string()),
            ("roles", roles),
            ("sample", sample.to_string()),
        ],
        messages: vec![ChatMessage::system(RETRIEVAL_SYSTEM), ChatMessage::user(user)],
        sampling: Sampling::Diverse,
    }
}

fn planning_user(definitions: &str, exemplars: &str, text: &str) -> String {
    let mut user = format!("Event definitions:\n{definitions}\n\n");
    if !exemplars.is_empty() {
        user.push_str("Example sentences:\n");
        user.push_str(exemplars);
        user.push_str("\n\n");
    }
    user.push_str("Text:\n");
    user.push_str(text);
    user.push_str("\n\n");
    user.push_str(PLANNING_INSTRUCTION);
    user
}

/// `exemplars` is the pre-formatted example block (one `- [Type] sentence`
/// line per exemplar), empty when no exemplars are available.
pub fn planning(definitions: &str, exemplars: &str, text: &str) -> Prompt {
    Prompt {
        template: TemplateId::Planning,
        bindings: vec![
            ("definitions", definitions.to_string()),
            ("exemplars", exemplars.to_string()),
            ("text", text.to_string()),
        ],
        messages: vec![
            ChatMessage::system(PLANNING_SYSTEM),
            ChatMessage::user(planning_user(definitions, exemplars, text)),
        ],
        sampling: Sampling::Deterministic,
    }
}

pub fn planning_retry(definitions: &str, exemplars: &str, text: &str, previous_reply: &str) -> Prompt {
    Prompt {
        template: TemplateId::PlanningRetry,
        bindings: vec![
            ("definitions", definitions.to_string()),
            ("exemplars", exemplars.to_string()),
            ("text", text.to_string()),
            ("previous_reply", previous_reply.to_string()),
        ],
        messages: vec![
            ChatMessage::system(PLANNING_SYSTEM),
            ChatMessage::user(planning_user(definitions, exemplars, text)),
            ChatMessage::assistant(previous_reply),
            ChatMessage::user(PLANNING_REMINDER),
        ],
        sampling: Sampling::Deterministic,
    }
}

/// A failed attempt to be repaired: the code and its rendered diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchRequest<'a> {
    pub previous_code: &'a str,
    pub diagnostic: &'a str,
}

pub fn coding(definition: &str, trigger: &str, rationale: &str, text: &str, patch: Option<PatchRequest<'_>>) -> Prompt {
    let mut user = format!("Event definition:\n{definition}\n\nTrigger: \"{trigger}\"\n");
    if !rationale.is_empty() {
        user.push_str(&format!("Rationale: {rationale}\n"));
    }
    user.push_str(&format!("Text: \"{text}\""));
    let mut bindings: Vec<(&'static str, String)> = vec![
        ("definition", definition.to_string()),
        ("trigger", trigger.to_string()),
        ("rationale", rationale.to_string()),
        ("text", text.to_string()),
    ];
    let template = match patch {
        None => TemplateId::Coding,
        Some(p) => {
            user.push_str(&format!(
                "\n\nPrevious code:\n{}\n\nVerification failed: {}\nPatch the code so that it fixes this error.",
                p.previous_code, p.diagnostic
            ));
            bindings.push(("previous_code", p.previous_code.to_string()));
            bindings.push(("diagnostic", p.diagnostic.to_string()));
            TemplateId::CodingPatch
        }
    };
    Prompt {
        template,
        bindings,
        messages: vec![ChatMessage::system(CODING_SYSTEM), ChatMessage::user(user)],
        sampling: Sampling::Deterministic,
    }
}

pub fn semantic_judge(trigger: &str, event_type: &str, text: &str) -> Prompt {
    let user = format!(
        "Text: \"{text}\"\nEvent type: {event_type}\nTrigger: \"{trigger}\"\nDoes the trigger evoke an event of this type in the text? Answer yes or no."
    );
    Prompt {
        template: TemplateId::SemanticJudge,
        bindings: vec![
            ("trigger", trigger.to_string()),
            ("event_type", event_type.to_string()),
            ("text", text.to_string()),
        ],
        messages: vec![ChatMessage::system(JUDGE_SYSTEM), ChatMessage::user(user)],
        sampling: Sampling::Deterministic,
    }
}

/// Rebuild a prompt from its template id and bindings.
pub fn rebuild(template: TemplateId, bindings: &[(&str, String)]) -> Option<Prompt> {
    let get = |name: &str| bindings.iter().find(|(k, _)| *k == name).map(|(_, v)| v.as_str());
    let prompt = match template {
        TemplateId::Retrieval => {
            let roles: Vec<&str> = match get("roles")? {
                "(none)" => Vec::new(),
                r => r.split(", ").collect(),
            };
            retrieval(get("event_type")?, &roles, get("sample")?.parse().ok()?)
        }
        TemplateId::Planning => planning(get("definitions")?, get("exemplars")?, get("text")?),
        TemplateId::PlanningRetry => planning_retry(
            get("definitions")?,
            get("exemplars")?,
            get("text")?,
            get("previous_reply")?,
        ),
        TemplateId::Coding => coding(
            get("definition")?,
            get("trigger")?,
            get("rationale")?,
            get("text")?,
            None,
        ),
        TemplateId::CodingPatch => coding(
            get("definition")?,
            get("trigger")?,
            get("rationale")?,
            get("text")?,
            Some(PatchRequest {
                previous_code: get("previous_code")?,
                diagnostic: get("diagnostic")?,
            }),
        ),
        TemplateId::SemanticJudge => semantic_judge(get("trigger")?, get("event_type")?, get("text")?),
    };
    Some(prompt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retrieval_prompt_wording() {
        let p = retrieval("Databreach", &["tool", "number-of-data", "victim", "time", "place"], 0);
        assert_eq!(p.messages[0].content, RETRIEVAL_SYSTEM);
        assert_eq!(
            p.messages[1].content,
            "Event type: Databreach\nRoles: tool, number-of-data, victim, time, place\nWrite one English sentence that contains a clear mention of the Databreach trigger and populates all roles."
        );
    }

    #[test]
    fn every_template_is_reconstructible() {
        let prompts = [
            retrieval("A", &["x", "y"], 2),
            retrieval("A", &[], 0),
            planning("defs", "- [A] s", "text"),
            planning_retry("defs", "", "text", "oops"),
            coding("class A", "hit", "why", "text", None),
            coding(
                "class A",
                "hit",
                "",
                "text",
                Some(PatchRequest {
                    previous_code: "A()",
                    diagnostic: "[T3] bad",
                }),
            ),
            semantic_judge("hit", "A", "text"),
        ];
        for p in prompts {
            let rebuilt = rebuild(p.template, &p.bindings).unwrap();
            assert_eq!(rebuilt, p);
            assert_eq!(rebuilt.fingerprint(), p.fingerprint());
        }
    }

    #[test]
    fn sample_index_changes_fingerprint_only() {
        let a = retrieval("A", &["x"], 0);
        let b = retrieval("A", &["x"], 1);
        assert_eq!(a.messages, b.messages);
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}

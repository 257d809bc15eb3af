//! The four agents: exemplar retrieval, trigger planning, event coding and
//! the semantic-compatibility judge used by the llm-assisted verifier.

mod backend;
pub mod prompts;

pub use backend::{fingerprint, BackendError, ChatBackend, ChatMessage, ChatRole, Prompt, Sampling, ScriptedBackend};
pub use prompts::{PatchRequest, TemplateId};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::lang::{parse_literal, Literal};
use crate::schema::{render_registry, render_schema_as_code, EventSchema};
use crate::text::find_case_insensitive;

/// Self-generated example sentences for one schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExemplarSet {
    pub event_type: String,
    pub sentences: Vec<String>,
    /// Set when no usable sentence came back; the exemplar block is then omitted.
    pub empty_warning: bool,
}

/// A candidate (trigger, event type) pair from the planning agent.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerHypothesis {
    pub trigger: String,
    pub event_type: String,
    pub confidence: f64,
    pub rationale: String,
    /// Char offset of the first case-insensitive occurrence in the text.
    pub char_offset: Option<usize>,
}

impl TriggerHypothesis {
    pub fn new(trigger: impl Into<String>, event_type: impl Into<String>, confidence: f64) -> Self {
        Self {
            trigger: trigger.into(),
            event_type: event_type.into(),
            confidence,
            rationale: String::new(),
            char_offset: None,
        }
    }

    pub fn located_in(mut self, text: &str) -> Self {
        self.char_offset = find_case_insensitive(text, &self.trigger);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("planning reply is not a hypothesis array after one reprompt: {reply}")]
    PlanningFormat { reply: String },
    #[error("planning requires non-empty text")]
    EmptyText,
    #[error("coding agent returned an empty reply")]
    EmptyCode,
}

/// Issue `k` independent single-sentence prompts and keep the distinct,
/// non-empty replies in generation order.
pub fn run_retrieval_agent(
    backend: &dyn ChatBackend,
    schema: &EventSchema,
    k: usize,
) -> Result<ExemplarSet, AgentError> {
    let roles: Vec<&str> = schema.roles().iter().map(|r| r.name.as_str()).collect();
    let mut sentences: Vec<String> = Vec::new();
    for sample in 0..k {
        let reply = backend.complete(&prompts::retrieval(schema.event_type(), &roles, sample))?;
        let sentence = clean_sentence(&reply);
        if !sentence.is_empty() && !sentences.contains(&sentence) {
            sentences.push(sentence);
        }
    }
    Ok(ExemplarSet {
        event_type: schema.event_type().to_string(),
        empty_warning: sentences.is_empty(),
        sentences,
    })
}

fn clean_sentence(reply: &str) -> String {
    let mut s = reply.trim();
    for (open, close) in [('"', '"'), ('\'', '\''), ('\u{201c}', '\u{201d}')] {
        if s.len() >= 2 && s.starts_with(open) && s.ends_with(close) {
            s = s[open.len_utf8()..s.len() - close.len_utf8()].trim();
        }
    }
    s.to_string()
}

/// The exemplar block embedded in the planning prompt.
pub fn format_exemplars(exemplars: &[ExemplarSet]) -> String {
    let lines: Vec<String> = exemplars
        .iter()
        .flat_map(|set| {
            set.sentences
                .iter()
                .map(move |s| format!("- [{}] {}", set.event_type, s))
        })
        .collect();
    lines.join("\n")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningOutcome {
    /// Sorted by non-increasing confidence, at most `k` entries.
    pub hypotheses: Vec<TriggerHypothesis>,
    pub reprompted: bool,
    /// Entries naming an event type outside the candidate schemas, or repeating an earlier pair.
    pub dropped: usize,
}

/// Ask for trigger/type hypotheses over `schemas`, rank them and keep the top `k`.
pub fn run_planning_agent(
    backend: &dyn ChatBackend,
    text: &str,
    schemas: &[&EventSchema],
    exemplars: &[ExemplarSet],
    k: usize,
) -> Result<PlanningOutcome, AgentError> {
    if text.trim().is_empty() {
        return Err(AgentError::EmptyText);
    }
    let definitions = render_registry(schemas);
    let examples = format_exemplars(exemplars);
    let first = backend.complete(&prompts::planning(&definitions, &examples, text))?;
    let (raw, reprompted) = match parse_hypothesis_reply(&first) {
        Some(raw) => (raw, false),
        None => {
            let second = backend.complete(&prompts::planning_retry(&definitions, &examples, text, &first))?;
            match parse_hypothesis_reply(&second) {
                Some(raw) => (raw, true),
                None => return Err(AgentError::PlanningFormat { reply: second }),
            }
        }
    };

    let known = |t: &str| schemas.iter().any(|s| s.event_type() == t);
    let mut kept: Vec<RawHypothesis> = Vec::new();
    let mut dropped = 0;
    for h in raw {
        let duplicate = kept
            .iter()
            .any(|k| k.event_type == h.event_type && k.trigger.to_lowercase() == h.trigger.to_lowercase());
        if !known(&h.event_type) || duplicate {
            dropped += 1;
        } else {
            kept.push(h);
        }
    }

    let n = kept.len();
    let mut hypotheses: Vec<TriggerHypothesis> = kept
        .into_iter()
        .enumerate()
        .map(|(i, h)| TriggerHypothesis {
            confidence: h
                .confidence
                .map_or_else(|| default_confidence(i + 1, n), |c| c.clamp(0.0, 1.0)),
            trigger: h.trigger,
            event_type: h.event_type,
            rationale: h.rationale,
            char_offset: None,
        })
        .map(|h| h.located_in(text))
        .collect();
    // Stable, so equal confidences keep reply order.
    hypotheses.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    hypotheses.truncate(k);
    Ok(PlanningOutcome {
        hypotheses,
        reprompted,
        dropped,
    })
}

/// `1 - (rank - 1) / n` for a 1-based rank among `n` hypotheses.
pub fn default_confidence(rank: usize, n: usize) -> f64 {
    1.0 - (rank as f64 - 1.0) / n as f64
}

#[derive(Debug)]
struct RawHypothesis {
    trigger: String,
    event_type: String,
    confidence: Option<f64>,
    rationale: String,
}

/// Extract the hypothesis array from a reply, tolerating prose or code
/// fences around it. `None` means the reply does not follow the contract.
fn parse_hypothesis_reply(reply: &str) -> Option<Vec<RawHypothesis>> {
    let body = extract_code_block(reply);
    let start = body.find('[')?;
    let end = body.rfind(']')?;
    if end < start {
        return None;
    }
    let Literal::List(items) = parse_literal(&body[start..=end]).ok()? else {
        return None;
    };
    items
        .into_iter()
        .map(|(item, _)| {
            let Literal::Object(fields) = item else {
                return None;
            };
            let mut trigger = None;
            let mut event_type = None;
            let mut confidence = None;
            let mut rationale = String::new();
            for (key, _, value, _) in fields {
                match (key.as_str(), value) {
                    ("trigger", Literal::Str(s)) => trigger = Some(s),
                    ("event_type", Literal::Str(s)) => event_type = Some(s),
                    ("confidence", Literal::Num(c)) => confidence = Some(c),
                    ("confidence", Literal::Int(c)) => confidence = Some(c as f64),
                    ("rationale", Literal::Str(s)) => rationale = s,
                    ("trigger" | "event_type", _) => return None,
                    _ => {}
                }
            }
            let trigger = trigger.filter(|t| !t.trim().is_empty())?;
            Some(RawHypothesis {
                trigger: trigger.trim().to_string(),
                event_type: event_type?,
                confidence,
                rationale,
            })
        })
        .collect()
}

/// The first fenced code block of a reply, or the whole reply, trimmed.
pub fn extract_code_block(reply: &str) -> &str {
    if let Some(open) = reply.find("```") {
        let after = &reply[open + 3..];
        // Skip an info string such as ```python.
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        if let Some(close) = body.find("```") {
            return body[..close].trim();
        }
    }
    reply.trim()
}

/// Generate code for a hypothesis, optionally patching a failed attempt.
pub fn run_coding_agent(
    backend: &dyn ChatBackend,
    hypothesis: &TriggerHypothesis,
    schema: &EventSchema,
    text: &str,
    patch: Option<PatchRequest<'_>>,
) -> Result<String, AgentError> {
    let prompt = prompts::coding(
        &render_schema_as_code(schema),
        &hypothesis.trigger,
        &hypothesis.rationale,
        text,
        patch,
    );
    let reply = backend.complete(&prompt)?;
    let code = extract_code_block(&reply);
    if code.is_empty() {
        return Err(AgentError::EmptyCode);
    }
    Ok(code.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JudgeVerdict {
    pub compatible: bool,
    /// The reply was neither yes nor no; `compatible` is then false.
    pub unparseable: bool,
}

/// Ask whether `trigger` evokes `event_type` in `text`.
pub fn judge_semantic_compat(
    backend: &dyn ChatBackend,
    trigger: &str,
    event_type: &str,
    text: &str,
) -> Result<JudgeVerdict, BackendError> {
    let reply = backend.complete(&prompts::semantic_judge(trigger, event_type, text))?;
    let word: String = reply
        .trim_start()
        .chars()
        .take_while(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    Ok(match word.as_str() {
        "yes" | "true" => JudgeVerdict {
            compatible: true,
            unparseable: false,
        },
        "no" | "false" => JudgeVerdict {
            compatible: false,
            unparseable: false,
        },
        _ => JudgeVerdict {
            compatible: false,
            unparseable: true,
        },
    })
}

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Deserialize;

use crate::lang::{EventObject, Value};
use crate::text::{char_len, char_slice};

/// A span of the document text in char offsets, `end` exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldArgument {
    pub role: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldEvent {
    pub event_type: String,
    pub trigger: Span,
    pub arguments: Vec<GoldArgument>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    /// Token offsets, sorted and non-overlapping.
    pub tokens: Vec<(usize, usize)>,
    pub gold_events: Vec<GoldEvent>,
}

impl Document {
    /// Document text covered by a span's offsets.
    pub fn span_text(&self, span: &Span) -> &str {
        char_slice(&self.text, span.start, span.end).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("corpus line {line}{}: {message}", .id.as_ref().map(|i| format!(" (record `{i}`)")).unwrap_or_default())]
pub struct CorpusError {
    pub line: usize,
    pub id: Option<String>,
    pub message: String,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    text: String,
    tokens: Vec<(usize, usize)>,
    #[serde(default)]
    events: Vec<RawEvent>,
}

#[derive(Deserialize)]
struct RawEvent {
    event_type: String,
    trigger: RawSpan,
    #[serde(default)]
    arguments: Vec<RawArgument>,
}

#[derive(Deserialize)]
struct RawSpan {
    text: String,
    start: usize,
    end: usize,
}

#[derive(Deserialize)]
struct RawArgument {
    role: String,
    text: String,
    start: usize,
    end: usize,
}

fn check_span(len: usize, start: usize, end: usize, what: &str) -> Result<(), String> {
    if start >= end || end > len {
        return Err(format!(
            "{what} span [{start}, {end}) is out of bounds for text of length {len}"
        ));
    }
    Ok(())
}

fn convert(raw: RawRecord) -> Result<Document, String> {
    let len = char_len(&raw.text);
    let mut prev_end = 0;
    for (i, &(start, end)) in raw.tokens.iter().enumerate() {
        check_span(len, start, end, "token")?;
        if i > 0 && start < prev_end {
            return Err(format!(
                "token {i} at [{start}, {end}) overlaps or precedes the previous token"
            ));
        }
        prev_end = end;
    }
    let mut gold_events = Vec::with_capacity(raw.events.len());
    for ev in raw.events {
        check_span(len, ev.trigger.start, ev.trigger.end, "trigger")?;
        let mut arguments = Vec::with_capacity(ev.arguments.len());
        for arg in ev.arguments {
            check_span(len, arg.start, arg.end, "argument")?;
            arguments.push(GoldArgument {
                role: arg.role,
                span: Span {
                    text: arg.text,
                    start: arg.start,
                    end: arg.end,
                },
            });
        }
        gold_events.push(GoldEvent {
            event_type: ev.event_type,
            trigger: Span {
                text: ev.trigger.text,
                start: ev.trigger.start,
                end: ev.trigger.end,
            },
            arguments,
        });
    }
    Ok(Document {
        id: raw.id,
        text: raw.text,
        tokens: raw.tokens,
        gold_events,
    })
}

/// Load newline-delimited corpus records. Blank lines are skipped; line
/// numbers in errors are 1-based.
pub fn load_corpus(source: &[u8]) -> Result<Vec<Document>, CorpusError> {
    let text = core::str::from_utf8(source).map_err(|e| CorpusError {
        line: 1 + source[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        id: None,
        message: "invalid UTF-8".to_string(),
    })?;
    let mut docs: Vec<Document> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| CorpusError {
            line: i + 1,
            id: None,
            message: e.to_string(),
        })?;
        let id = raw.id.clone();
        if docs.iter().any(|d| d.id == id) {
            return Err(CorpusError {
                line: i + 1,
                id: Some(id),
                message: "duplicate document id".to_string(),
            });
        }
        docs.push(convert(raw).map_err(|message| CorpusError {
            line: i + 1,
            id: Some(id),
            message,
        })?);
    }
    Ok(docs)
}

/// Render a document back into its corpus record line.
pub fn corpus_record(doc: &Document) -> String {
    use serde_json::json;
    let events: Vec<serde_json::Value> = doc
        .gold_events
        .iter()
        .map(|e| {
            let args: Vec<serde_json::Value> = e
                .arguments
                .iter()
                .map(|a| json!({"role": a.role, "text": a.span.text, "start": a.span.start, "end": a.span.end}))
                .collect();
            json!({
                "event_type": e.event_type,
                "trigger": {"text": e.trigger.text, "start": e.trigger.start, "end": e.trigger.end},
                "arguments": args,
            })
        })
        .collect();
    serde_json::to_string(&json!({
        "id": doc.id,
        "text": doc.text,
        "tokens": doc.tokens,
        "events": events,
    }))
    .unwrap_or_default()
}

/// The gold annotations expressed as predictions: one event per gold event,
/// arguments grouped by role in annotation order.
pub fn gold_as_predictions(docs: &[Document]) -> BTreeMap<String, Vec<EventObject>> {
    docs.iter()
        .map(|d| {
            let events = d
                .gold_events
                .iter()
                .map(|g| {
                    let mut e = EventObject::new(g.event_type.clone(), d.span_text(&g.trigger).to_owned());
                    for a in &g.arguments {
                        e.arguments
                            .entry(a.role.clone())
                            .or_default()
                            .push(Value::Str(d.span_text(&a.span).to_owned()));
                    }
                    e
                })
                .collect();
            (d.id.clone(), events)
        })
        .collect()
}

#[cfg(test)]
pub(crate) const FIXTURE: &str = concat!(
    r#"{"id": "d1", "text": "Hackers demanded a ransom.", "tokens": [[0,7],[8,16],[17,18],[19,25]], "events": [{"event_type": "Ransom", "trigger": {"text": "demanded", "start": 8, "end": 16}, "arguments": [{"role": "attacker", "text": "Hackers", "start": 0, "end": 7}]}]}"#,
    "\n\n",
    r#"{"id": "d2", "text": "A data breach hit the clinic.", "tokens": [[0,1],[2,6],[7,13],[14,17],[18,21],[22,28]], "events": [{"event_type": "Databreach", "trigger": {"text": "data breach", "start": 2, "end": 13}}, {"event_type": "Attack", "trigger": {"text": "hit", "start": 14, "end": 17}, "arguments": []}]}"#,
    "\n",
    r#"{"id": "d3", "text": "Nothing happened.", "tokens": [[0,7],[8,16]]}"#,
    "\n"
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_fixture_with_hand_counts() {
        let docs = load_corpus(FIXTURE.as_bytes()).unwrap();
        assert_eq!(docs.len(), 3);
        let events: usize = docs.iter().map(|d| d.gold_events.len()).sum();
        let args: usize = docs
            .iter()
            .flat_map(|d| &d.gold_events)
            .map(|e| e.arguments.len())
            .sum();
        assert_eq!((events, args), (3, 1));
        assert!(docs[1].gold_events[0].arguments.is_empty());
        assert_eq!(docs[1].span_text(&docs[1].gold_events[0].trigger), "data breach");
    }

    #[test]
    fn out_of_bounds_span_names_record() {
        let bad = r#"{"id": "x9", "text": "short", "tokens": [], "events": [{"event_type": "A", "trigger": {"text": "t", "start": 3, "end": 9}}]}"#;
        let err = load_corpus(bad.as_bytes()).unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.id.as_deref(), Some("x9"));
        assert!(err.to_string().contains("x9"), "{err}");
    }

    #[test]
    fn malformed_line_number() {
        let src = format!("{}\n{{not json\n", FIXTURE.lines().next().unwrap());
        assert_eq!(load_corpus(src.as_bytes()).unwrap_err().line, 2);
    }

    #[test]
    fn overlapping_tokens_rejected() {
        let bad = r#"{"id": "a", "text": "abcdef", "tokens": [[0,3],[2,4]]}"#;
        assert!(load_corpus(bad.as_bytes()).is_err());
    }

    #[test]
    fn record_round_trip() {
        let docs = load_corpus(FIXTURE.as_bytes()).unwrap();
        let text: String = docs.iter().map(|d| corpus_record(d) + "\n").collect();
        assert_eq!(load_corpus(text.as_bytes()).unwrap(), docs);
    }
}

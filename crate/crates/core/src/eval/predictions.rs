//! Prediction records: one `{"doc_id": ..., "event": {...}}` object per line.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::lang::{parse_event, serialize_event, EventObject};
use crate::schema::EventSchema;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("prediction line {line}: {message}")]
pub struct PredictionError {
    pub line: usize,
    pub message: String,
}

/// Render one prediction line (no trailing newline).
pub fn prediction_record(doc_id: &str, event: &EventObject, schema: Option<&EventSchema>) -> String {
    let id = serde_json::to_string(doc_id).unwrap_or_default();
    format!("{{\"doc_id\": {id}, \"event\": {}}}", serialize_event(event, schema))
}

/// Parse prediction lines into events grouped by document id, keeping file
/// order within a document. Blank lines are skipped.
pub fn parse_predictions(source: &str) -> Result<BTreeMap<String, Vec<EventObject>>, PredictionError> {
    let mut out: BTreeMap<String, Vec<EventObject>> = BTreeMap::new();
    for (i, line) in source.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fail = |message: String| PredictionError { line: i + 1, message };
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
        let doc_id = value
            .get("doc_id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| fail("missing string field `doc_id`".to_string()))?;
        let event = value
            .get("event")
            .ok_or_else(|| fail("missing field `event`".to_string()))?;
        let event_src = serde_json::to_string(event).map_err(|e| fail(e.to_string()))?;
        let parsed = parse_event(&event_src, None).map_err(|e| fail(e.to_string()))?;
        if let Some(extra) = parsed.extra_fields.first() {
            return Err(fail(format!("unexpected field `{extra}` in event")));
        }
        out.entry(doc_id.to_string()).or_default().push(parsed.event);
    }
    Ok(out)
}

use serde::Serialize;

use super::corpus::{Document, Span};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DatasetStats {
    pub documents: usize,
    pub event_mentions: usize,
    /// Mean document length in tokens.
    pub avg_doc_length: f64,
    /// Share of triggers covering more than one token, in percent.
    pub multi_token_trigger_pct: f64,
}

fn tokens_covered(doc: &Document, span: &Span) -> usize {
    doc.tokens
        .iter()
        .filter(|&&(s, e)| s < span.end && e > span.start)
        .count()
}

pub fn dataset_stats(docs: &[Document]) -> DatasetStats {
    let documents = docs.len();
    let event_mentions: usize = docs.iter().map(|d| d.gold_events.len()).sum();
    let tokens: usize = docs.iter().map(|d| d.tokens.len()).sum();
    let multi = docs
        .iter()
        .flat_map(|d| d.gold_events.iter().map(move |e| tokens_covered(d, &e.trigger)))
        .filter(|&n| n > 1)
        .count();
    DatasetStats {
        documents,
        event_mentions,
        avg_doc_length: if documents == 0 {
            0.0
        } else {
            tokens as f64 / documents as f64
        },
        multi_token_trigger_pct: if event_mentions == 0 {
            0.0
        } else {
            100.0 * multi as f64 / event_mentions as f64
        },
    }
}

//! Trigger and argument scores.
//!
//! A prediction counts as correct for a gold item when the predicted string,
//! located in the document text, occupies exactly the gold span. Because a
//! string occupies a span iff it equals the text under that span, the
//! compatibility relation is equality of keys, and a greedy scan over gold
//! items in text order yields a maximum one-to-one matching.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::Serialize;

use super::corpus::Document;
use crate::lang::EventObject;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Trigger identification.
    Ti,
    /// Trigger classification.
    Tc,
    /// Argument identification.
    Ai,
    /// Argument classification.
    Ac,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Ti, Metric::Tc, Metric::Ai, Metric::Ac];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Ti => "TI",
            Metric::Tc => "TC",
            Metric::Ai => "AI",
            Metric::Ac => "AC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MetricScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub num_pred: usize,
    pub num_gold: usize,
    pub num_correct: usize,
}

impl MetricScore {
    /// Precision is 0 with no predictions and recall is 0 with no gold items.
    /// When both sides are empty there is nothing to get wrong and every
    /// score is 1.
    pub fn from_counts(num_pred: usize, num_gold: usize, num_correct: usize) -> Self {
        if num_pred == 0 && num_gold == 0 {
            return MetricScore {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
                num_pred,
                num_gold,
                num_correct,
            };
        }
        let precision = if num_pred == 0 {
            0.0
        } else {
            num_correct as f64 / num_pred as f64
        };
        let recall = if num_gold == 0 {
            0.0
        } else {
            num_correct as f64 / num_gold as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        MetricScore {
            precision,
            recall,
            f1,
            num_pred,
            num_gold,
            num_correct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MetricsReport {
    pub ti: MetricScore,
    pub tc: MetricScore,
    pub ai: MetricScore,
    pub ac: MetricScore,
}

impl MetricsReport {
    pub fn get(&self, metric: Metric) -> &MetricScore {
        match metric {
            Metric::Ti => &self.ti,
            Metric::Tc => &self.tc,
            Metric::Ai => &self.ai,
            Metric::Ac => &self.ac,
        }
    }

    fn get_mut(&mut self, metric: Metric) -> &mut MetricScore {
        match metric {
            Metric::Ti => &mut self.ti,
            Metric::Tc => &mut self.tc,
            Metric::Ai => &mut self.ai,
            Metric::Ac => &mut self.ac,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("prediction refers to unknown document `{0}`")]
    UnknownDocument(String),
}

/// Match predictions to gold items one-to-one. `golds` must be in text
/// order; each gold item takes the earliest unmatched prediction with an
/// equal key. Returns `(prediction index, gold index)` pairs.
pub fn match_one_to_one<K: PartialEq>(preds: &[K], golds: &[K]) -> Vec<(usize, usize)> {
    let mut used = alloc::vec![false; preds.len()];
    let mut pairs = Vec::new();
    for (gi, g) in golds.iter().enumerate() {
        if let Some(pi) = (0..preds.len()).find(|&pi| !used[pi] && preds[pi] == *g) {
            used[pi] = true;
            pairs.push((pi, gi));
        }
    }
    pairs
}

#[derive(Default, Clone, Copy)]
struct Counts {
    pred: usize,
    gold: usize,
    correct: usize,
}

fn tally<K: PartialEq>(counts: &mut Counts, preds: &[K], golds: &[K]) {
    counts.pred += preds.len();
    counts.gold += golds.len();
    counts.correct += match_one_to_one(preds, golds).len();
}

/// Per-document keys for each metric, gold sides sorted by span position.
struct DocKeys<'a> {
    pred_ti: Vec<&'a str>,
    pred_tc: Vec<(&'a str, &'a str)>,
    pred_ai: Vec<(&'a str, String)>,
    pred_ac: Vec<(&'a str, &'a str, String)>,
    gold_ti: Vec<&'a str>,
    gold_tc: Vec<(&'a str, &'a str)>,
    gold_ai: Vec<(&'a str, String)>,
    gold_ac: Vec<(&'a str, &'a str, String)>,
}

fn doc_keys<'a>(doc: &'a Document, preds: &'a [EventObject]) -> DocKeys<'a> {
    let mut triggers: Vec<_> = doc.gold_events.iter().collect();
    triggers.sort_by_key(|e| (e.trigger.start, e.trigger.end));
    let mut args: Vec<_> = doc
        .gold_events
        .iter()
        .flat_map(|e| e.arguments.iter().map(move |a| (e, a)))
        .collect();
    args.sort_by_key(|(_, a)| (a.span.start, a.span.end));

    let mut keys = DocKeys {
        pred_ti: Vec::new(),
        pred_tc: Vec::new(),
        pred_ai: Vec::new(),
        pred_ac: Vec::new(),
        gold_ti: triggers.iter().map(|e| doc.span_text(&e.trigger)).collect(),
        gold_tc: triggers
            .iter()
            .map(|e| (e.event_type.as_str(), doc.span_text(&e.trigger)))
            .collect(),
        gold_ai: args
            .iter()
            .map(|(e, a)| (e.event_type.as_str(), doc.span_text(&a.span).to_owned()))
            .collect(),
        gold_ac: args
            .iter()
            .map(|(e, a)| {
                (
                    e.event_type.as_str(),
                    a.role.as_str(),
                    doc.span_text(&a.span).to_owned(),
                )
            })
            .collect(),
    };
    for p in preds {
        keys.pred_ti.push(p.trigger.as_str());
        keys.pred_tc.push((p.event_type.as_str(), p.trigger.as_str()));
        for (role, values) in &p.arguments {
            for v in values {
                let text = v.as_text();
                keys.pred_ai.push((p.event_type.as_str(), text.clone()));
                keys.pred_ac.push((p.event_type.as_str(), role.as_str(), text));
            }
        }
    }
    keys
}

/// Micro-averaged scores over the corpus. Documents without an entry in
/// `predictions` count as having no predictions.
pub fn score(predictions: &BTreeMap<String, Vec<EventObject>>, gold: &[Document]) -> Result<MetricsReport, ScoreError> {
    if let Some(id) = predictions.keys().find(|id| !gold.iter().any(|d| &d.id == *id)) {
        return Err(ScoreError::UnknownDocument(id.clone()));
    }
    let mut counts = [Counts::default(); 4];
    for doc in gold {
        let preds = predictions.get(&doc.id).map(Vec::as_slice).unwrap_or(&[]);
        let k = doc_keys(doc, preds);
        tally(&mut counts[0], &k.pred_ti, &k.gold_ti);
        tally(&mut counts[1], &k.pred_tc, &k.gold_tc);
        tally(&mut counts[2], &k.pred_ai, &k.gold_ai);
        tally(&mut counts[3], &k.pred_ac, &k.gold_ac);
    }
    let mut report = MetricsReport::default();
    for (metric, c) in Metric::ALL.into_iter().zip(counts) {
        *report.get_mut(metric) = MetricScore::from_counts(c.pred, c.gold, c.correct);
    }
    Ok(report)
}

/// Mean of precision, recall and F1 across runs, plus the per-run reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanReport {
    pub runs: usize,
    pub mean: BTreeMap<Metric, MeanScore>,
    pub per_run: Vec<MetricsReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MeanScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MeanReport {
    pub fn new(per_run: Vec<MetricsReport>) -> Self {
        let n = per_run.len().max(1) as f64;
        let mean = Metric::ALL
            .into_iter()
            .map(|m| {
                let mut s = MeanScore::default();
                for r in &per_run {
                    let x = r.get(m);
                    s.precision += x.precision;
                    s.recall += x.recall;
                    s.f1 += x.f1;
                }
                s.precision /= n;
                s.recall /= n;
                s.f1 /= n;
                (m, s)
            })
            .collect();
        MeanReport {
            runs: per_run.len(),
            mean,
            per_run,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    /// Aligned text table, scores as percentages with one decimal.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<6} {:>9} {:>9} {:>9}", "metric", "P", "R", "F1");
        for (m, s) in &self.mean {
            let _ = writeln!(
                out,
                "{:<6} {:>9} {:>9} {:>9}",
                m.label(),
                format!("{:.1}", s.precision * 100.0),
                format!("{:.1}", s.recall * 100.0),
                format!("{:.1}", s.f1 * 100.0)
            );
        }
        let _ = write!(out, "runs: {}", self.runs);
        out
    }
}

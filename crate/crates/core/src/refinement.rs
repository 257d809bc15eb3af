//! Dual-loop refinement: pick the most confident hypothesis, let the coding
//! agent patch it up to `t` times against verifier diagnostics, and fall
//! back to the next hypothesis when it keeps failing. At most
//! `hypothesis_k * t` coding calls are made per refine call.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cell::RefCell;
use core::cmp::Ordering;

use crate::agents::{
    run_coding_agent, run_planning_agent, run_retrieval_agent, AgentError, ChatBackend, ExemplarSet, PatchRequest,
    PlanningOutcome, TriggerHypothesis,
};
use crate::lang::{parse_event_code, serialize_event, EventObject};
use crate::schema::{EventSchema, SchemaRegistry};
use crate::verifier::{verify, Check, Diagnostic, VerificationMode, VerificationResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeKind {
    #[default]
    Strict,
    Llm,
}

impl ModeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeKind::Strict => "strict",
            ModeKind::Llm => "llm",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "strict" => Some(ModeKind::Strict),
            "llm" => Some(ModeKind::Llm),
            _ => None,
        }
    }

    pub fn bind(self, backend: &dyn ChatBackend) -> VerificationMode<'_> {
        match self {
            ModeKind::Strict => VerificationMode::Strict,
            ModeKind::Llm => VerificationMode::LlmAssisted(backend),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefinementConfig {
    pub hypothesis_k: usize,
    pub patch_attempts: usize,
    pub mode: ModeKind,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            hypothesis_k: 3,
            patch_attempts: 3,
            mode: ModeKind::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("hypothesis pool is exhausted")]
pub struct PoolExhausted;

/// Candidate hypotheses plus the set already tried and removed.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisPool {
    hypotheses: Vec<TriggerHypothesis>,
    consumed: Vec<bool>,
}

/// Selection order: higher confidence, then earlier offset (located before
/// unlocated), then trigger text.
fn selection_order(a: &TriggerHypothesis, b: &TriggerHypothesis) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then_with(|| match (a.char_offset, b.char_offset) {
            (Some(x), Some(y)) => x.cmp(&y),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        })
        .then_with(|| a.trigger.cmp(&b.trigger))
}

impl HypothesisPool {
    pub fn new(hypotheses: Vec<TriggerHypothesis>) -> Self {
        let consumed = alloc::vec![false; hypotheses.len()];
        Self { hypotheses, consumed }
    }

    /// Index of the best hypothesis not yet consumed.
    pub fn select_best(&self) -> Result<usize, PoolExhausted> {
        self.hypotheses
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.consumed[*i])
            .min_by(|(_, a), (_, b)| selection_order(a, b))
            .map(|(i, _)| i)
            .ok_or(PoolExhausted)
    }

    pub fn get(&self, index: usize) -> &TriggerHypothesis {
        &self.hypotheses[index]
    }

    pub fn consume(&mut self, index: usize) {
        self.consumed[index] = true;
    }

    pub fn remaining(&self) -> usize {
        self.consumed.iter().filter(|c| !**c).count()
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    pub fn hypotheses(&self) -> &[TriggerHypothesis] {
        &self.hypotheses
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttemptRecord {
    pub hypothesis: TriggerHypothesis,
    /// 1-based inner-loop attempt.
    pub attempt: usize,
    pub code: String,
    pub event: Option<EventObject>,
    pub result: VerificationResult,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RefineOutcome {
    Accepted(EventObject),
    ExtractionFailed,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RefinementTrace {
    pub attempts: Vec<AttemptRecord>,
    pub coding_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineReport {
    pub outcome: RefineOutcome,
    pub trace: RefinementTrace,
}

/// An operational failure, with the trace gathered before it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("refinement aborted: {error}")]
pub struct RefineAbort {
    pub error: AgentError,
    pub trace: RefinementTrace,
}

fn no_code_result() -> VerificationResult {
    VerificationResult::fail(Diagnostic::new(
        Check::Structural,
        "code does not compile: the coding agent returned no code",
        "line 1, column 1",
    ))
}

/// Run the dual loop over `pool`. Hypotheses are consumed as they are
/// exhausted or accepted, so a caller may call again to look for further
/// events.
pub fn refine(
    pool: &mut HypothesisPool,
    text: &str,
    registry: &SchemaRegistry,
    config: &RefinementConfig,
    backend: &dyn ChatBackend,
) -> Result<RefineReport, RefineAbort> {
    let mode = config.mode.bind(backend);
    let mut trace = RefinementTrace::default();
    let mut outer = 0;

    while outer < config.hypothesis_k {
        let Ok(index) = pool.select_best() else {
            break;
        };
        let hypothesis = pool.get(index).clone();
        let Some(schema) = registry.get(&hypothesis.event_type) else {
            pool.consume(index);
            continue;
        };
        outer += 1;

        let mut previous: Option<(String, String)> = None;
        for attempt in 1..=config.patch_attempts {
            let patch = previous.as_ref().map(|(code, diagnostic)| PatchRequest {
                previous_code: code,
                diagnostic,
            });
            trace.coding_calls += 1;
            let (code, result, event) = match run_coding_agent(backend, &hypothesis, schema, text, patch) {
                Ok(code) => {
                    let object = parse_event_code(&code, registry, Some(hypothesis.clone()));
                    let result = match verify(&object, text, schema, mode) {
                        Ok(r) => r,
                        Err(e) => {
                            return Err(RefineAbort {
                                error: AgentError::Backend(e),
                                trace,
                            })
                        }
                    };
                    let event = object.parsed.ok().map(|p| p.event);
                    (code, result, event)
                }
                Err(AgentError::EmptyCode) => (String::new(), no_code_result(), None),
                Err(error) => return Err(RefineAbort { error, trace }),
            };
            let diagnostic = result.diagnostic.as_ref().map(ToString::to_string);
            trace.attempts.push(AttemptRecord {
                hypothesis: hypothesis.clone(),
                attempt,
                code: code.clone(),
                event: event.clone(),
                result: result.clone(),
            });
            if result.verdict {
                pool.consume(index);
                let event = event.expect("accepted code always parses");
                return Ok(RefineReport {
                    outcome: RefineOutcome::Accepted(event),
                    trace,
                });
            }
            previous = Some((code, diagnostic.unwrap_or_default()));
        }
        pool.consume(index);
    }

    Ok(RefineReport {
        outcome: RefineOutcome::ExtractionFailed,
        trace,
    })
}

/// Per-schema exemplar storage, populated on first use.
pub trait ExemplarCache {
    fn lookup(&self, event_type: &str) -> Option<ExemplarSet>;
    fn store(&self, set: ExemplarSet);
}

/// Single-threaded cache.
#[derive(Debug, Default)]
pub struct LocalExemplarCache {
    sets: RefCell<BTreeMap<String, ExemplarSet>>,
}

impl ExemplarCache for LocalExemplarCache {
    fn lookup(&self, event_type: &str) -> Option<ExemplarSet> {
        self.sets.borrow().get(event_type).cloned()
    }

    fn store(&self, set: ExemplarSet) {
        self.sets.borrow_mut().insert(set.event_type.clone(), set);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub exemplar_k: usize,
    pub refinement: RefinementConfig,
    /// Keep refining the remaining pool after an accepted event.
    pub multi_event: bool,
    pub event_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            exemplar_k: 3,
            refinement: RefinementConfig::default(),
            multi_event: false,
            event_cap: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DocumentTrace {
    pub planning: Option<PlanningOutcome>,
    pub refinements: Vec<(RefineOutcome, RefinementTrace)>,
}

impl DocumentTrace {
    pub fn coding_calls(&self) -> usize {
        self.refinements.iter().map(|(_, t)| t.coding_calls).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentExtraction {
    pub events: Vec<EventObject>,
    pub trace: DocumentTrace,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("extraction aborted: {error}")]
pub struct ExtractAbort {
    pub error: AgentError,
    pub trace: DocumentTrace,
}

/// Make sure every schema in `registry` has an exemplar set in `cache`.
pub fn warm_exemplars(
    registry: &SchemaRegistry,
    exemplar_k: usize,
    backend: &dyn ChatBackend,
    cache: &dyn ExemplarCache,
) -> Result<(), AgentError> {
    for schema in registry {
        if cache.lookup(schema.event_type()).is_none() {
            cache.store(run_retrieval_agent(backend, schema, exemplar_k)?);
        }
    }
    Ok(())
}

/// Retrieval, planning over every schema, then refinement.
pub fn extract_document(
    text: &str,
    registry: &SchemaRegistry,
    config: &PipelineConfig,
    backend: &dyn ChatBackend,
    cache: &dyn ExemplarCache,
) -> Result<DocumentExtraction, ExtractAbort> {
    let mut trace = DocumentTrace::default();
    let abort = |error: AgentError, trace: DocumentTrace| ExtractAbort { error, trace };

    if let Err(e) = warm_exemplars(registry, config.exemplar_k, backend, cache) {
        return Err(abort(e, trace));
    }
    let exemplars: Vec<ExemplarSet> = registry
        .iter()
        .filter_map(|s| cache.lookup(s.event_type()))
        .filter(|set| !set.sentences.is_empty())
        .collect();
    let schemas: Vec<&EventSchema> = registry.iter().collect();
    let planning = match run_planning_agent(backend, text, &schemas, &exemplars, config.refinement.hypothesis_k) {
        Ok(p) => p,
        Err(e) => return Err(abort(e, trace)),
    };
    let mut pool = HypothesisPool::new(planning.hypotheses.clone());
    trace.planning = Some(planning);

    let mut events = Vec::new();
    while !pool.is_empty() {
        match refine(&mut pool, text, registry, &config.refinement, backend) {
            Ok(report) => {
                let accepted = match &report.outcome {
                    RefineOutcome::Accepted(event) => {
                        events.push(event.clone());
                        true
                    }
                    RefineOutcome::ExtractionFailed => false,
                };
                trace.refinements.push((report.outcome, report.trace));
                if !accepted || !config.multi_event || events.len() >= config.event_cap {
                    break;
                }
            }
            Err(RefineAbort { error, trace: partial }) => {
                trace.refinements.push((RefineOutcome::ExtractionFailed, partial));
                return Err(abort(error, trace));
            }
        }
    }
    Ok(DocumentExtraction { events, trace })
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).unwrap_or_default()
}

fn hypothesis_json(h: &TriggerHypothesis) -> String {
    format!(
        "{{\"trigger\": {}, \"event_type\": {}, \"confidence\": {}, \"rationale\": {}, \"char_offset\": {}}}",
        json_str(&h.trigger),
        json_str(&h.event_type),
        serde_json::to_string(&h.confidence).unwrap_or_default(),
        json_str(&h.rationale),
        h.char_offset.map_or_else(|| "null".to_string(), |o| o.to_string()),
    )
}

/// Newline-delimited trace records for one document: a planning record, one
/// record per coding attempt and one outcome record per refine call.
pub fn trace_records(doc_id: &str, trace: &DocumentTrace, registry: &SchemaRegistry) -> Vec<String> {
    let mut out = Vec::new();
    let id = json_str(doc_id);
    if let Some(p) = &trace.planning {
        let hyps: Vec<String> = p.hypotheses.iter().map(hypothesis_json).collect();
        out.push(format!(
            "{{\"record\": \"planning\", \"doc_id\": {id}, \"hypotheses\": [{}], \"reprompted\": {}, \"dropped\": {}}}",
            hyps.join(", "),
            p.reprompted,
            p.dropped
        ));
    }
    for (n, (outcome, t)) in trace.refinements.iter().enumerate() {
        for a in &t.attempts {
            let event = a.event.as_ref().map_or_else(
                || "null".to_string(),
                |e| serialize_event(e, registry.get(&e.event_type)),
            );
            let diagnostic = a
                .result
                .diagnostic
                .as_ref()
                .map_or_else(|| "null".to_string(), |d| json_str(&d.to_string()));
            out.push(format!(
                "{{\"record\": \"attempt\", \"doc_id\": {id}, \"refine\": {}, \"hypothesis\": {}, \"attempt\": {}, \"code\": {}, \"event\": {event}, \"verdict\": {}, \"diagnostic\": {diagnostic}}}",
                n + 1,
                hypothesis_json(&a.hypothesis),
                a.attempt,
                json_str(&a.code),
                a.result.verdict,
            ));
        }
        let label = match outcome {
            RefineOutcome::Accepted(_) => "accepted",
            RefineOutcome::ExtractionFailed => "extraction_failed",
        };
        out.push(format!(
            "{{\"record\": \"outcome\", \"doc_id\": {id}, \"refine\": {}, \"outcome\": \"{label}\", \"coding_calls\": {}}}",
            n + 1,
            t.coding_calls
        ));
    }
    out
}

/// A trace record for a document whose extraction aborted.
pub fn error_record(doc_id: &str, error: &dyn core::fmt::Display) -> String {
    format!(
        "{{\"record\": \"error\", \"doc_id\": {}, \"error\": {}}}",
        json_str(doc_id),
        json_str(&error.to_string())
    )
}

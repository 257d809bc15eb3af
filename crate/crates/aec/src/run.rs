//! Corpus extraction runs: documents are processed by a pool of workers and
//! the results are written in corpus order by a single writer.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use aec_core::agents::ChatBackend;
use aec_core::eval::{prediction_record, Document};
use aec_core::refinement::{error_record, extract_document, trace_records, warm_exemplars, PipelineConfig};
use aec_core::schema::SchemaRegistry;

use crate::cache::SharedExemplarCache;

/// Prediction and trace lines for one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocOutput {
    pub predictions: Vec<String>,
    pub trace: Vec<String>,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub run: usize,
    pub predictions: PathBuf,
    pub trace: PathBuf,
    pub documents: usize,
    pub failed: usize,
    pub events: usize,
}

pub fn predictions_path(out: &Path, run: usize) -> PathBuf {
    out.join(format!("predictions.run{run}.jsonl"))
}

pub fn trace_path(out: &Path, run: usize) -> PathBuf {
    out.join(format!("trace.run{run}.jsonl"))
}

fn process(
    doc: &Document,
    registry: &SchemaRegistry,
    pipeline: &PipelineConfig,
    backend: &dyn ChatBackend,
    cache: &SharedExemplarCache,
) -> DocOutput {
    match extract_document(&doc.text, registry, pipeline, backend, cache) {
        Ok(extraction) => DocOutput {
            predictions: extraction
                .events
                .iter()
                .map(|e| prediction_record(&doc.id, e, registry.get(&e.event_type)))
                .collect(),
            trace: trace_records(&doc.id, &extraction.trace, registry),
            failed: false,
        },
        Err(abort) => {
            log::warn!("document {} skipped: {}", doc.id, abort.error);
            let mut trace = trace_records(&doc.id, &abort.trace, registry);
            trace.push(error_record(&doc.id, &abort.error));
            DocOutput {
                predictions: Vec::new(),
                trace,
                failed: true,
            }
        }
    }
}

/// Run the pipeline over every document with `workers` threads. Output is
/// returned in corpus order whatever the scheduling.
pub fn extract_corpus<B: ChatBackend + Sync>(
    docs: &[Document],
    registry: &SchemaRegistry,
    pipeline: &PipelineConfig,
    backend: &B,
    workers: usize,
) -> Vec<DocOutput> {
    let cache = SharedExemplarCache::default();
    if let Err(e) = warm_exemplars(registry, pipeline.exemplar_k, backend, &cache) {
        log::warn!("exemplar generation failed: {e}");
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<DocOutput>>> = Mutex::new(vec![None; docs.len()]);
    thread::scope(|scope| {
        for _ in 0..workers.max(1).min(docs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(doc) = docs.get(i) else {
                    break;
                };
                log::info!("extracting document {}", doc.id);
                let output = process(doc, registry, pipeline, backend, &cache);
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(output);
            });
        }
    });
    slots
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|o| o.expect("every document is processed"))
        .collect()
}

fn write_lines<'a>(path: &Path, lines: impl Iterator<Item = &'a String>) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for line in lines {
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Write the prediction and trace files of run number `run` (1-based).
pub fn write_run(out: &Path, run: usize, outputs: &[DocOutput]) -> io::Result<RunSummary> {
    let predictions = predictions_path(out, run);
    let trace = trace_path(out, run);
    write_lines(&predictions, outputs.iter().flat_map(|o| &o.predictions))?;
    write_lines(&trace, outputs.iter().flat_map(|o| &o.trace))?;
    Ok(RunSummary {
        run,
        predictions,
        trace,
        documents: outputs.len(),
        failed: outputs.iter().filter(|o| o.failed).count(),
        events: outputs.iter().map(|o| o.predictions.len()).sum(),
    })
}

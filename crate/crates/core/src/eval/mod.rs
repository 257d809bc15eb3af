//! Corpus ingestion, scoring and dataset statistics.

mod corpus;
mod metrics;
mod predictions;
mod sample;
mod stats;

pub use corpus::{
    corpus_record, gold_as_predictions, load_corpus, CorpusError, Document, GoldArgument, GoldEvent, Span,
};
pub use metrics::{match_one_to_one, score, MeanReport, MeanScore, Metric, MetricScore, MetricsReport, ScoreError};
pub use predictions::{parse_predictions, prediction_record, PredictionError};
pub use sample::{sample_indices, sample_split, SampleError};
pub use stats::{dataset_stats, DatasetStats};

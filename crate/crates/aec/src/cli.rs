//! Command-line interface. Exit status: 0 on success, 1 on operational
//! failure, 2 on usage or configuration errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use aec_core::agents::{BackendError, ChatBackend, Prompt, ScriptedBackend};
use aec_core::eval::{dataset_stats, load_corpus, parse_predictions, sample_split, score, Document, MeanReport};
use aec_core::schema::{load_ontology, parse_schema_definitions, render_registry, SchemaRegistry};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{resolve, ConfigError, PartialBackend, PartialConfig, RunConfig};
use crate::fixture::load_fixture;
use crate::http::HttpBackend;
use crate::run::{extract_corpus, write_run};

#[derive(Debug, Parser)]
#[command(
    name = "aec",
    version,
    about = "Schema-driven event extraction with verified code generation"
)]
pub struct Cli {
    /// Config file: JSON, or TOML when the name ends in `.toml`.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract events from a corpus and write prediction and trace files.
    Extract(Box<ExtractArgs>),
    /// Score one or more prediction files against a corpus.
    Eval(EvalArgs),
    /// Print corpus statistics.
    Stats(StatsArgs),
    /// Inspect an ontology.
    Schema(SchemaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Strict,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Ontology file: a JSON array of schemas, or dataclass definitions in a `.py` file.
    #[arg(long, value_name = "FILE")]
    pub ontology: Option<PathBuf>,
    /// Corpus file with one JSON record per line.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Chat-completions URL of an OpenAI-compatible server.
    #[arg(long, value_name = "URL")]
    pub backend_endpoint: Option<String>,
    /// Model name sent to the server.
    #[arg(long)]
    pub model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, value_name = "VAR")]
    pub api_key_env: Option<String>,
    /// Exemplar sentences generated per event type.
    #[arg(long, value_name = "K")]
    pub exemplar_k: Option<usize>,
    /// Trigger hypotheses kept from planning.
    #[arg(long, value_name = "K")]
    pub hypothesis_k: Option<usize>,
    /// Coding attempts per hypothesis.
    #[arg(long, value_name = "T")]
    pub patch_attempts: Option<usize>,
    /// Semantic check: lexical trigger match only, or also an LLM judge.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Documents processed in parallel.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Seed for document sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent extraction runs.
    #[arg(long, value_name = "N")]
    pub runs: Option<usize>,
    /// Fixture mapping prompt fingerprints to replies; replaces the HTTP backend.
    #[arg(long, value_name = "FILE")]
    pub scripted_fixture: Option<PathBuf>,
    /// Process a seeded uniform sample of N documents.
    #[arg(long, value_name = "N")]
    pub sample: Option<usize>,
    /// Keep extracting from the remaining hypotheses after an accepted event.
    #[arg(long)]
    pub multi_event: bool,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Prediction files, one per run.
    #[arg(required = true, value_name = "PREDICTIONS")]
    pub predictions: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SchemaArgs {
    #[arg(long, value_name = "FILE")]
    pub ontology: Option<PathBuf>,
    #[command(subcommand)]
    pub action: SchemaAction,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum SchemaAction {
    /// Event types and their role counts.
    List,
    /// Class-definition text of every schema.
    Render,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

fn missing(flag: &str, key: &str, var: &str) -> CliError {
    CliError::Usage(format!(
        "missing required {flag} (or `{key}` in the config file, or {var})"
    ))
}

fn require<'a>(value: &'a Option<PathBuf>, flag: &str, key: &str, var: &str) -> Result<&'a Path, CliError> {
    value.as_deref().ok_or_else(|| missing(flag, key, var))
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))
}

pub fn read_ontology(path: &Path) -> Result<SchemaRegistry, CliError> {
    let bytes = read(path)?;
    let fail = |e: &dyn std::fmt::Display| CliError::Failure(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "py") {
        let text = String::from_utf8(bytes).map_err(|e| fail(&e))?;
        let schemas = parse_schema_definitions(&text).map_err(|e| fail(&e))?;
        SchemaRegistry::new(schemas).map_err(|e| fail(&e))
    } else {
        load_ontology(&bytes).map_err(|e| fail(&e))
    }
}

pub fn read_corpus(path: &Path) -> Result<Vec<Document>, CliError> {
    load_corpus(&read(path)?).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

/// Either backend, so the runner can be generic over one type.
pub enum AnyBackend {
    Scripted(ScriptedBackend),
    Http(HttpBackend),
}

impl ChatBackend for AnyBackend {
    fn complete(&self, prompt: &Prompt) -> Result<String, BackendError> {
        match self {
            AnyBackend::Scripted(b) => b.complete(prompt),
            AnyBackend::Http(b) => b.complete(prompt),
        }
    }
}

fn backend_for(config: &RunConfig, env: &dyn Fn(&str) -> Option<String>) -> Result<AnyBackend, CliError> {
    if let Some(path) = &config.scripted_fixture {
        return load_fixture(path)
            .map(AnyBackend::Scripted)
            .map_err(|e| CliError::Failure(e.to_string()));
    }
    if config.backend.endpoint.is_none() {
        return Err(CliError::Usage(
            "missing required --backend-endpoint or --scripted-fixture".into(),
        ));
    }
    HttpBackend::with_env(&config.backend, env)
        .map(AnyBackend::Http)
        .map_err(|e| CliError::Config(ConfigError::Invalid(e.to_string())))
}

fn extract_flags(a: &ExtractArgs) -> PartialConfig {
    PartialConfig {
        ontology: a.ontology.clone(),
        corpus: a.corpus.clone(),
        out: a.out.clone(),
        backend: PartialBackend {
            endpoint: a.backend_endpoint.clone(),
            model: a.model.clone(),
            api_key_env: a.api_key_env.clone(),
            ..PartialBackend::default()
        },
        scripted_fixture: a.scripted_fixture.clone(),
        exemplar_k: a.exemplar_k,
        hypothesis_k: a.hypothesis_k,
        patch_attempts: a.patch_attempts,
        mode: a.mode.map(|m| match m {
            Mode::Strict => "strict".to_string(),
            Mode::Llm => "llm".to_string(),
        }),
        workers: a.workers,
        seed: a.seed,
        runs: a.runs,
        sample: a.sample,
        multi_event: a.multi_event.then_some(true),
        event_cap: None,
    }
}

fn cmd_extract(
    args: &ExtractArgs,
    config_file: Option<&Path>,
    env: &dyn Fn(&str) -> Option<String>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let config = resolve(extract_flags(args), config_file, env)?;
    if args.print_config {
        writeln!(out, "{}", config.to_json()).map_err(|e| CliError::Failure(e.to_string()))?;
        return Ok(());
    }
    let ontology = require(&config.ontology, "--ontology", "ontology", "AEC_ONTOLOGY")?;
    let corpus = require(&config.corpus, "--corpus", "corpus", "AEC_CORPUS")?;
    let out_dir = require(&config.out, "--out", "out", "AEC_OUT")?;
    let backend = backend_for(&config, env)?;

    let registry = read_ontology(ontology)?;
    let mut docs = read_corpus(corpus)?;
    if let Some(n) = config.sample {
        docs = sample_split(&docs, n, config.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", out_dir.display())))?;
    std::fs::write(out_dir.join("config.json"), config.to_json() + "\n")
        .map_err(|e| CliError::Failure(e.to_string()))?;

    let pipeline = config.pipeline();
    for run in 1..=config.runs {
        let outputs = extract_corpus(&docs, &registry, &pipeline, &backend, config.workers);
        let summary = write_run(out_dir, run, &outputs).map_err(|e| CliError::Failure(e.to_string()))?;
        log::info!(
            "run {run}: {} documents, {} events, {} skipped",
            summary.documents,
            summary.events,
            summary.failed
        );
        writeln!(out, "{}", summary.predictions.display()).map_err(|e| CliError::Failure(e.to_string()))?;
    }
    Ok(())
}

fn corpus_path(
    flag: &Option<PathBuf>,
    config_file: Option<&Path>,
    env: &dyn Fn(&str) -> Option<String>,
) -> Result<PathBuf, CliError> {
    let config = resolve(
        PartialConfig {
            corpus: flag.clone(),
            ..PartialConfig::default()
        },
        config_file,
        env,
    )?;
    config.corpus.ok_or_else(|| missing("--corpus", "corpus", "AEC_CORPUS"))
}

fn cmd_eval(
    args: &EvalArgs,
    config_file: Option<&Path>,
    env: &dyn Fn(&str) -> Option<String>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let corpus = read_corpus(&corpus_path(&args.corpus, config_file, env)?)?;
    let mut reports = Vec::new();
    for path in &args.predictions {
        let text = String::from_utf8(read(path)?).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
        let predictions =
            parse_predictions(&text).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
        let report = score(&predictions, &corpus).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
        reports.push(report);
    }
    let mean = MeanReport::new(reports);
    let text = match args.format {
        Format::Json => mean.to_json(),
        Format::Table => {
            let mut t = String::new();
            if args.predictions.len() > 1 {
                for (path, report) in args.predictions.iter().zip(&mean.per_run) {
                    t.push_str(&format!("{}\n", path.display()));
                    t.push_str(&MeanReport::new(vec![*report]).to_table());
                    t.push_str("\n\n");
                }
                t.push_str("mean\n");
            }
            t.push_str(&mean.to_table());
            t
        }
    };
    writeln!(out, "{text}").map_err(|e| CliError::Failure(e.to_string()))
}

fn cmd_stats(
    args: &StatsArgs,
    config_file: Option<&Path>,
    env: &dyn Fn(&str) -> Option<String>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let corpus = read_corpus(&corpus_path(&args.corpus, config_file, env)?)?;
    let stats = dataset_stats(&corpus);
    let empty = corpus.is_empty();
    let text = match args.format {
        Format::Json => {
            let mut value = serde_json::to_value(stats).unwrap_or_default();
            if empty {
                value["note"] = "empty corpus".into();
            }
            serde_json::to_string_pretty(&value).unwrap_or_default()
        }
        Format::Table => {
            let mut t = format!(
                "{:>6} {:>17} {:>16} {:>24}\n{:>6} {:>17} {:>16} {:>24}",
                "# Doc",
                "# Event Mentions",
                "Avg. Doc Length",
                "Multi-word Triggers (%)",
                stats.documents,
                stats.event_mentions,
                format!("{:.2}", stats.avg_doc_length),
                format!("{:.2}", stats.multi_token_trigger_pct),
            );
            if empty {
                t.push_str("\nempty corpus");
            }
            t
        }
    };
    writeln!(out, "{text}").map_err(|e| CliError::Failure(e.to_string()))
}

fn cmd_schema(
    args: &SchemaArgs,
    config_file: Option<&Path>,
    env: &dyn Fn(&str) -> Option<String>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let config = resolve(
        PartialConfig {
            ontology: args.ontology.clone(),
            ..PartialConfig::default()
        },
        config_file,
        env,
    )?;
    let path = require(&config.ontology, "--ontology", "ontology", "AEC_ONTOLOGY")?;
    let registry = read_ontology(path)?;
    let mut text = String::new();
    match args.action {
        SchemaAction::List => {
            for s in &registry {
                text.push_str(&format!("{}\t{} roles\n", s.event_type(), s.roles().len()));
            }
        }
        SchemaAction::Render => {
            if !registry.is_empty() {
                let schemas: Vec<_> = registry.iter().collect();
                text.push_str(&render_registry(&schemas));
                text.push('\n');
            }
        }
    }
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Failure(e.to_string()))
}

/// Run the CLI with explicit arguments, environment and output streams.
pub fn run<I, T>(args: I, env: &dyn Fn(&str) -> Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let config_file = cli.config.as_deref();
    let result = match &cli.command {
        Command::Extract(a) => cmd_extract(a, config_file, env, out),
        Command::Eval(a) => cmd_eval(a, config_file, env, out),
        Command::Stats(a) => cmd_stats(a, config_file, env, out),
        Command::Schema(a) => cmd_schema(a, config_file, env, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

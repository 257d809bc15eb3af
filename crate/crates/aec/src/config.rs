//! Run configuration. Values are layered: command-line flags override the
//! config file, which overrides `AEC_*` environment variables, which
//! override the built-in defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use aec_core::refinement::{ModeKind, PipelineConfig, RefinementConfig};
use serde::{Deserialize, Serialize, Serializer};

pub const MAX_RETRIES: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackendConfig {
    /// Full chat-completions URL.
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Temperature for planning, coding and judging.
    pub temperature: f64,
    /// Temperature for exemplar generation.
    pub retrieval_temperature: f64,
    pub max_tokens: u32,
    /// Environment variable holding the bearer token. No header is sent when
    /// unset.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    pub retries: u32,
    pub retry_backoff_ms: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            endpoint: None,
            model: None,
            temperature: 0.0,
            retrieval_temperature: 0.7,
            max_tokens: 512,
            api_key_env: None,
            timeout_secs: 60,
            retries: 2,
            retry_backoff_ms: 500,
        }
    }
}

fn serialize_mode<S: Serializer>(mode: &ModeKind, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(mode.as_str())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub ontology: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub backend: BackendConfig,
    pub scripted_fixture: Option<PathBuf>,
    pub exemplar_k: usize,
    pub hypothesis_k: usize,
    pub patch_attempts: usize,
    #[serde(serialize_with = "serialize_mode")]
    pub mode: ModeKind,
    pub workers: usize,
    pub seed: u64,
    pub runs: usize,
    /// Score a seeded uniform sample of this many documents instead of the
    /// whole corpus.
    pub sample: Option<usize>,
    pub multi_event: bool,
    pub event_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pipeline = PipelineConfig::default();
        Self {
            ontology: None,
            corpus: None,
            out: None,
            backend: BackendConfig::default(),
            scripted_fixture: None,
            exemplar_k: pipeline.exemplar_k,
            hypothesis_k: pipeline.refinement.hypothesis_k,
            patch_attempts: pipeline.refinement.patch_attempts,
            mode: pipeline.refinement.mode,
            workers: 1,
            seed: 0,
            runs: 3,
            sample: None,
            multi_event: pipeline.multi_event,
            event_cap: pipeline.event_cap,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {}: {message}", .path.display())]
    File { path: PathBuf, message: String },
    #[error("invalid value for {var}: {message}")]
    Env { var: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("missing required {0}")]
    Missing(&'static str),
}

/// One configuration layer; unset fields fall through to the layer below.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub ontology: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub backend: PartialBackend,
    pub scripted_fixture: Option<PathBuf>,
    pub exemplar_k: Option<usize>,
    pub hypothesis_k: Option<usize>,
    pub patch_attempts: Option<usize>,
    pub mode: Option<String>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub sample: Option<usize>,
    pub multi_event: Option<bool>,
    pub event_cap: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialBackend {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub retrieval_temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub api_key_env: Option<String>,
    pub timeout_secs: Option<u64>,
    pub retries: Option<u32>,
    pub retry_backoff_ms: Option<u64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

impl RunConfig {
    fn apply(&mut self, layer: PartialConfig) -> Result<(), ConfigError> {
        set_opt(&mut self.ontology, layer.ontology);
        set_opt(&mut self.corpus, layer.corpus);
        set_opt(&mut self.out, layer.out);
        set_opt(&mut self.scripted_fixture, layer.scripted_fixture);
        set(&mut self.exemplar_k, layer.exemplar_k);
        set(&mut self.hypothesis_k, layer.hypothesis_k);
        set(&mut self.patch_attempts, layer.patch_attempts);
        if let Some(mode) = layer.mode {
            self.mode = ModeKind::from_name(&mode)
                .ok_or_else(|| ConfigError::Invalid(format!("mode must be `strict` or `llm`, got `{mode}`")))?;
        }
        set(&mut self.workers, layer.workers);
        set(&mut self.seed, layer.seed);
        set(&mut self.runs, layer.runs);
        set_opt(&mut self.sample, layer.sample);
        set(&mut self.multi_event, layer.multi_event);
        set(&mut self.event_cap, layer.event_cap);

        let b = layer.backend;
        let backend = &mut self.backend;
        set_opt(&mut backend.endpoint, b.endpoint);
        set_opt(&mut backend.model, b.model);
        set(&mut backend.temperature, b.temperature);
        set(&mut backend.retrieval_temperature, b.retrieval_temperature);
        set(&mut backend.max_tokens, b.max_tokens);
        set_opt(&mut backend.api_key_env, b.api_key_env);
        set(&mut backend.timeout_secs, b.timeout_secs);
        set(&mut backend.retries, b.retries);
        set(&mut backend.retry_backoff_ms, b.retry_backoff_ms);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("exemplar_k", self.exemplar_k),
            ("hypothesis_k", self.hypothesis_k),
            ("patch_attempts", self.patch_attempts),
            ("workers", self.workers),
            ("runs", self.runs),
            ("event_cap", self.event_cap),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ConfigError::Invalid(format!("{name} must be at least 1")));
            }
        }
        for (name, t) in [
            ("temperature", self.backend.temperature),
            ("retrieval_temperature", self.backend.retrieval_temperature),
        ] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be a non-negative number")));
            }
        }
        if self.backend.retries > MAX_RETRIES {
            return Err(ConfigError::Invalid(format!("retries must be at most {MAX_RETRIES}")));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            exemplar_k: self.exemplar_k,
            refinement: RefinementConfig {
                hypothesis_k: self.hypothesis_k,
                patch_attempts: self.patch_attempts,
                mode: self.mode,
            },
            multi_event: self.multi_event,
            event_cap: self.event_cap,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

fn env_value<T: FromStr>(env: &impl Fn(&str) -> Option<String>, var: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match env(var) {
        None => Ok(None),
        Some(raw) => raw.trim().parse().map(Some).map_err(|e: T::Err| ConfigError::Env {
            var: var.to_string(),
            message: e.to_string(),
        }),
    }
}

/// The environment layer, read through `env` so tests need not touch the
/// process environment.
pub fn env_layer(env: impl Fn(&str) -> Option<String>) -> Result<PartialConfig, ConfigError> {
    let path = |var: &str| env(var).map(PathBuf::from);
    Ok(PartialConfig {
        ontology: path("AEC_ONTOLOGY"),
        corpus: path("AEC_CORPUS"),
        out: path("AEC_OUT"),
        scripted_fixture: path("AEC_SCRIPTED_FIXTURE"),
        exemplar_k: env_value(&env, "AEC_EXEMPLAR_K")?,
        hypothesis_k: env_value(&env, "AEC_HYPOTHESIS_K")?,
        patch_attempts: env_value(&env, "AEC_PATCH_ATTEMPTS")?,
        mode: env("AEC_MODE"),
        workers: env_value(&env, "AEC_WORKERS")?,
        seed: env_value(&env, "AEC_SEED")?,
        runs: env_value(&env, "AEC_RUNS")?,
        sample: env_value(&env, "AEC_SAMPLE")?,
        multi_event: env_value(&env, "AEC_MULTI_EVENT")?,
        event_cap: env_value(&env, "AEC_EVENT_CAP")?,
        backend: PartialBackend {
            endpoint: env("AEC_BACKEND_ENDPOINT"),
            model: env("AEC_MODEL"),
            temperature: env_value(&env, "AEC_TEMPERATURE")?,
            retrieval_temperature: env_value(&env, "AEC_RETRIEVAL_TEMPERATURE")?,
            max_tokens: env_value(&env, "AEC_MAX_TOKENS")?,
            api_key_env: env("AEC_API_KEY_ENV"),
            timeout_secs: env_value(&env, "AEC_TIMEOUT_SECS")?,
            retries: env_value(&env, "AEC_RETRIES")?,
            retry_backoff_ms: env_value(&env, "AEC_RETRY_BACKOFF_MS")?,
        },
    })
}

/// Parse a config file. `.toml` files are read as TOML, anything else as JSON.
pub fn file_layer(path: &Path) -> Result<PartialConfig, ConfigError> {
    let fail = |message: String| ConfigError::File {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| fail(e.to_string()))
    } else {
        serde_json::from_str(&text).map_err(|e| fail(e.to_string()))
    }
}

/// Resolve the full configuration from its layers and validate it.
pub fn resolve(
    flags: PartialConfig,
    config_file: Option<&Path>,
    env: impl Fn(&str) -> Option<String>,
) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    config.apply(env_layer(env)?)?;
    if let Some(path) = config_file {
        config.apply(file_layer(path)?)?;
    }
    config.apply(flags)?;
    config.validate()?;
    Ok(config)
}

//! Scripted-backend fixture files: a JSON object mapping prompt
//! fingerprints to canned replies.

use std::collections::BTreeMap;
use std::path::Path;

use aec_core::agents::ScriptedBackend;

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("cannot read fixture {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed fixture {path}: {source}")]
    Format {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub fn parse_fixture(text: &str) -> Result<ScriptedBackend, serde_json::Error> {
    let replies: BTreeMap<String, String> = serde_json::from_str(text)?;
    Ok(ScriptedBackend::new(replies))
}

pub fn load_fixture(path: &Path) -> Result<ScriptedBackend, FixtureError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| FixtureError::Io {
        path: shown.clone(),
        source,
    })?;
    parse_fixture(&text).map_err(|source| FixtureError::Format { path: shown, source })
}

/// Pretty-printed fixture text with keys in sorted order.
pub fn render_fixture(backend: &ScriptedBackend) -> String {
    let mut text = serde_json::to_string_pretty(backend.replies()).unwrap_or_default();
    text.push('\n');
    text
}

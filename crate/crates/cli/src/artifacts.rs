//! Output plumbing: run manifest, JSON and CSV writers.
//!
//! Data artifacts are deterministic functions of (config, seed); the
//! manifest records run metadata and is the one file that carries a
//! wall-clock timestamp.

use serde::Serialize;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::CliError;

#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub config_path: String,
    pub output_dir: String,
    pub seed: u64,
    pub tool_version: &'a str,
    pub timestamp_unix_s: u64,
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Config(format!("cannot create output directory {path:?}: {e}")))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {path:?}: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("cannot encode {path:?}: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_manifest(
    out: &Path,
    command: &str,
    config: &Path,
    seed: u64,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        command,
        config_path: config.display().to_string(),
        output_dir: out.display().to_string(),
        seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        timestamp_unix_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    write_json(&out.join("manifest.json"), &manifest)
}

/// Builds a CSV document from a unit-suffixed header and numeric rows,
/// with shortest-round-trip float formatting.
pub fn csv_document(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                text.push(',');
            }
            first = false;
            text.push_str(&format!("{v}"));
        }
        text.push('\n');
    }
    text
}

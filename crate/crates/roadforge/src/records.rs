//! Intermediate JSON files: `.intersections.json`, `.analyzed.json` and
//! `.distributions.json`.

use std::path::Path;

use roadforge_core::analyzer::AnalysisReport;
use roadforge_core::extractor::RawIntersection;
use roadforge_core::stats::ParameterDistribution;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: line {line}, column {column}: {message}")]
    Syntax { path: String, line: usize, column: usize, message: String },
    #[error("{0} already exists (use --force to overwrite)")]
    Exists(String),
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(text: &str, path: &str) -> Result<T, RecordError> {
    serde_json::from_str(text).map_err(|e| RecordError::Syntax {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, RecordError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| RecordError::Io { path: p.clone(), source })?;
    from_json(&text, &p)
}

/// Writes `contents`, refusing to replace an existing file unless `force`.
pub fn write_file(path: &Path, contents: &[u8], force: bool) -> Result<(), RecordError> {
    let p = path.display().to_string();
    if !force && path.exists() {
        return Err(RecordError::Exists(p));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| RecordError::Io { path: dir.display().to_string(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| RecordError::Io { path: p, source })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T, force: bool) -> Result<(), RecordError> {
    write_file(path, to_json(value).as_bytes(), force)
}

pub fn read_intersections(path: &Path) -> Result<Vec<RawIntersection>, RecordError> {
    read_json(path)
}

pub fn read_analyzed(path: &Path) -> Result<AnalysisReport, RecordError> {
    read_json(path)
}

pub fn read_distributions(path: &Path) -> Result<Vec<ParameterDistribution>, RecordError> {
    read_json(path)
}

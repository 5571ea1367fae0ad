//! Results store: one JSON object per line, one line per experiment cell.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalMetrics, MetricsError};

/// Condition name of the unaugmented baseline.
pub const BASE: &str = "base";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub model: String,
    pub dataset: String,
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_test: Option<usize>,
    #[serde(default)]
    pub timestamp: String,
    /// Set on cells whose trainer failed; such lines carry no metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ResultRecord {
    pub fn success(model: &str, dataset: &str, language: &str, m: &EvalMetrics) -> Self {
        Self {
            model: model.into(),
            dataset: dataset.into(),
            language: language.into(),
            accuracy: Some(m.accuracy),
            precision: Some(m.precision),
            recall: Some(m.recall),
            f1: Some(m.f1),
            n_test: Some(m.n_test),
            timestamp: chrono::Utc::now().to_rfc3339(),
            error: None,
        }
    }

    pub fn failure(model: &str, dataset: &str, language: &str, error: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            dataset: dataset.into(),
            language: language.into(),
            accuracy: None,
            precision: None,
            recall: None,
            f1: None,
            n_test: None,
            timestamp: chrono::Utc::now().to_rfc3339(),
            error: Some(error.into()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn is_base(&self) -> bool {
        self.language == BASE
    }

    pub fn triple(&self) -> (&str, &str, &str) {
        (&self.model, &self.dataset, &self.language)
    }

    pub fn metrics(&self) -> Option<EvalMetrics> {
        if self.is_failed() {
            return None;
        }
        Some(EvalMetrics {
            accuracy: self.accuracy?,
            precision: self.precision?,
            recall: self.recall?,
            f1: self.f1?,
            n_test: self.n_test?,
            counts: None,
        })
    }

    /// Schema check: identity fields set, and either an error marker or a
    /// complete metric set with every value in `[0, 1]`.
    pub fn validate(&self) -> Result<(), String> {
        if self.model.is_empty() || self.dataset.is_empty() || self.language.is_empty() {
            return Err("model, dataset and language must be non-empty".into());
        }
        if self.is_failed() {
            return Ok(());
        }
        let m = self
            .metrics()
            .ok_or("missing one of accuracy, precision, recall, f1, n_test")?;
        for (name, v) in [
            ("accuracy", m.accuracy),
            ("precision", m.precision),
            ("recall", m.recall),
            ("f1", m.f1),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Reads every line of a store. A missing file is an empty store.
pub fn read_store(path: &Path) -> Result<Vec<ResultRecord>, MetricsError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(MetricsError::Io(format!("{}: {e}", path.display()))),
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let store_err = |reason: String| MetricsError::Store { line: i + 1, reason };
        let record: ResultRecord = serde_json::from_str(line).map_err(|e| store_err(e.to_string()))?;
        record.validate().map_err(store_err)?;
        out.push(record);
    }
    Ok(out)
}

pub fn append_record(path: &Path, record: &ResultRecord) -> Result<(), MetricsError> {
    let io = |e: std::io::Error| MetricsError::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut line = serde_json::to_string(record).expect("records serialize");
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    f.write_all(line.as_bytes()).map_err(io)?;
    f.flush().map_err(io)
}

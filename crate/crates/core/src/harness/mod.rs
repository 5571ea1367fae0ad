//! Experiment grid: models × datasets × conditions, run through trainer
//! adapters and recorded in a resumable results store.

mod manifest;
mod overlap;
mod runner;
mod trainer;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::ALL;
use crate::corpus::{is_valid_code, CorpusError};
use crate::metrics::{MetricsError, BASE};

pub use manifest::{CellId, ManifestFiles, TrainerManifest, MANIFEST_FILE, METRICS_FILE};
pub use overlap::{builtin_overlap_trainer, choose_threshold, jaccard, OverlapTrainer};
pub use runner::{run_matrix, CorpusLayout, RunOptions, RunSummary, TrainerRegistry};
pub use trainer::{invoke_trainer, CommandTrainer, Trainer, DEFAULT_TRAINER_TIMEOUT};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Store(#[from] MetricsError),
}

#[derive(Debug, Error)]
pub enum TrainerError {
    #[error("failed to launch adapter `{command}`: {reason}")]
    Launch { command: String, reason: String },
    #[error("adapter timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("adapter exited with status {0}")]
    NonZeroExit(String),
    #[error("adapter wrote no metrics record at {0}")]
    MissingOutput(String),
    #[error("metrics record does not match the results-store schema: {0}")]
    Schema(String),
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{0}")]
    Io(String),
}

/// Training condition of a cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    /// Unaugmented training split.
    Base,
    /// Original records plus every language's augmented records.
    All,
    /// Original records plus one language's augmented records.
    Language(String),
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Base => f.write_str(BASE),
            Condition::All => f.write_str(ALL),
            Condition::Language(code) => f.write_str(code),
        }
    }
}

impl FromStr for Condition {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            BASE => Ok(Condition::Base),
            ALL => Ok(Condition::All),
            code if is_valid_code(code) => Ok(Condition::Language(code.to_string())),
            other => Err(HarnessError::InvalidPlan(format!("unknown condition `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExperimentCell {
    pub model: String,
    pub dataset: String,
    pub condition: Condition,
}

impl ExperimentCell {
    pub fn id(&self) -> CellId {
        CellId {
            model: self.model.clone(),
            dataset: self.dataset.clone(),
            language: self.condition.to_string(),
        }
    }
}

impl fmt::Display for ExperimentCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.model, self.dataset, self.condition)
    }
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn check_list(kind: &str, items: &[String]) -> Result<(), HarnessError> {
    if items.is_empty() {
        return Err(HarnessError::InvalidPlan(format!("no {kind} given")));
    }
    let mut seen = HashSet::new();
    for item in items {
        if !is_identifier(item) {
            return Err(HarnessError::InvalidPlan(format!("unknown {kind} identifier `{item}`")));
        }
        if !seen.insert(item) {
            return Err(HarnessError::InvalidPlan(format!("{kind} `{item}` listed twice")));
        }
    }
    Ok(())
}

/// Cartesian product ordered by dataset, then model, then condition, each
/// in the order given.
pub fn plan_matrix(
    models: &[String],
    datasets: &[String],
    conditions: &[String],
) -> Result<Vec<ExperimentCell>, HarnessError> {
    check_list("model", models)?;
    check_list("dataset", datasets)?;
    check_list("condition", conditions)?;
    let conditions = conditions
        .iter()
        .map(|c| c.parse())
        .collect::<Result<Vec<Condition>, _>>()?;
    let mut cells = Vec::with_capacity(models.len() * datasets.len() * conditions.len());
    for dataset in datasets {
        for model in models {
            for condition in &conditions {
                cells.push(ExperimentCell {
                    model: model.clone(),
                    dataset: dataset.clone(),
                    condition: condition.clone(),
                });
            }
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub epochs: u32,
    pub batch_size: u32,
    pub learning_rate: f64,
    pub max_sequence_length: u32,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            epochs: 3,
            batch_size: 32,
            learning_rate: 3e-5,
            max_sequence_length: 128,
            seed: 42,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.epochs == 0 || self.batch_size == 0 || self.max_sequence_length == 0 {
            return Err("epochs, batch_size and max_sequence_length must be positive".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err("learning_rate must be positive".into());
        }
        Ok(())
    }
}

/// Per-model partial override of [`TrainerConfig`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigOverride {
    pub epochs: Option<u32>,
    pub batch_size: Option<u32>,
    pub learning_rate: Option<f64>,
    pub max_sequence_length: Option<u32>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerSettings {
    pub defaults: TrainerConfig,
    pub overrides: BTreeMap<String, ConfigOverride>,
}

impl Default for TrainerSettings {
    /// Shared defaults, with batch size 16 for `xlnet`.
    fn default() -> Self {
        let mut overrides = BTreeMap::new();
        overrides.insert(
            "xlnet".to_string(),
            ConfigOverride {
                batch_size: Some(16),
                ..ConfigOverride::default()
            },
        );
        Self {
            defaults: TrainerConfig::default(),
            overrides,
        }
    }
}

impl TrainerSettings {
    pub fn config_for(&self, model: &str) -> TrainerConfig {
        let d = self.defaults;
        match self.overrides.get(model) {
            None => d,
            Some(o) => TrainerConfig {
                epochs: o.epochs.unwrap_or(d.epochs),
                batch_size: o.batch_size.unwrap_or(d.batch_size),
                learning_rate: o.learning_rate.unwrap_or(d.learning_rate),
                max_sequence_length: o.max_sequence_length.unwrap_or(d.max_sequence_length),
                seed: o.seed.unwrap_or(d.seed),
            },
        }
    }
}

//! Resumable execution of a planned grid.
//!
//! Corpus layout:
//!
//! ```text
//! <data_dir>/<dataset>/{train,dev,test}.jsonl     original splits
//! <augmented_dir>/<dataset>/<code>.jsonl          augmented-only records
//! <augmented_dir>/<dataset>/all.jsonl             originals + every language
//! <work_dir>/<dataset>/<model>/<condition>/       manifest, metrics, logs
//! ```
//!
//! A language condition trains on the original train split followed by that
//! language's augmented records; the combined file is written into the cell
//! directory.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use super::manifest::{ManifestFiles, TrainerManifest, MANIFEST_FILE, METRICS_FILE};
use super::trainer::invoke_trainer;
use super::{Condition, ExperimentCell, HarnessError, Trainer, TrainerError, TrainerSettings};
use crate::augment::ALL;
use crate::corpus::{load_corpus, write_corpus, Corpus, CorpusFormat, SplitTag};
use crate::fsutil;
use crate::metrics::{append_record, read_store, ResultRecord};

#[derive(Debug, Clone)]
pub struct CorpusLayout {
    pub data_dir: PathBuf,
    pub augmented_dir: PathBuf,
}

impl CorpusLayout {
    pub fn split_file(&self, dataset: &str, split: &str) -> PathBuf {
        self.data_dir.join(dataset).join(format!("{split}.jsonl"))
    }

    pub fn augmented_file(&self, dataset: &str, condition: &str) -> PathBuf {
        self.augmented_dir.join(dataset).join(format!("{condition}.jsonl"))
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub work_dir: PathBuf,
    pub workers: usize,
    pub settings: TrainerSettings,
}

/// Maps model ids to adapters, with an optional fallback.
#[derive(Clone, Default)]
pub struct TrainerRegistry {
    by_model: HashMap<String, Arc<dyn Trainer>>,
    fallback: Option<Arc<dyn Trainer>>,
}

impl TrainerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fallback(trainer: Arc<dyn Trainer>) -> Self {
        Self {
            by_model: HashMap::new(),
            fallback: Some(trainer),
        }
    }

    pub fn register(&mut self, model: impl Into<String>, trainer: Arc<dyn Trainer>) {
        self.by_model.insert(model.into(), trainer);
    }

    pub fn resolve(&self, model: &str) -> Option<Arc<dyn Trainer>> {
        self.by_model.get(model).cloned().or_else(|| self.fallback.clone())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub planned: usize,
    /// Cells already completed in the store.
    pub skipped: usize,
    pub succeeded: usize,
    pub failed: usize,
}

fn cell_dir(work_dir: &Path, cell: &ExperimentCell) -> PathBuf {
    work_dir
        .join(&cell.dataset)
        .join(&cell.model)
        .join(cell.condition.to_string())
}

fn train_file_for(cell: &ExperimentCell, layout: &CorpusLayout, dir: &Path) -> Result<PathBuf, TrainerError> {
    match &cell.condition {
        Condition::Base => Ok(layout.split_file(&cell.dataset, "train")),
        Condition::All => Ok(layout.augmented_file(&cell.dataset, ALL)),
        Condition::Language(code) => {
            let original = load_corpus(&layout.split_file(&cell.dataset, "train"), CorpusFormat::Interchange)?;
            let augmented = load_corpus(&layout.augmented_file(&cell.dataset, code), CorpusFormat::Interchange)?;
            let mut records = original.records;
            records.extend(augmented.records);
            let combined = Corpus::new(cell.dataset.clone(), SplitTag::Train, records);
            combined.validate()?;
            let path = dir.join("train.jsonl");
            write_corpus(&combined, &path)?;
            Ok(path)
        }
    }
}

fn run_cell(
    cell: &ExperimentCell,
    trainer: Option<Arc<dyn Trainer>>,
    layout: &CorpusLayout,
    options: &RunOptions,
) -> Result<crate::metrics::EvalMetrics, TrainerError> {
    let trainer = trainer.ok_or_else(|| TrainerError::Launch {
        command: cell.model.clone(),
        reason: "no trainer adapter registered for this model".into(),
    })?;
    let dir = cell_dir(&options.work_dir, cell);
    std::fs::create_dir_all(&dir).map_err(|e| TrainerError::Io(format!("{}: {e}", dir.display())))?;
    let train = train_file_for(cell, layout, &dir)?;
    let manifest = TrainerManifest {
        cell: cell.id(),
        files: ManifestFiles {
            train: fsutil_abs(&train),
            dev: fsutil_abs(&layout.split_file(&cell.dataset, "dev")),
            test: fsutil_abs(&layout.split_file(&cell.dataset, "test")),
        },
        config: options.settings.config_for(&cell.model),
        output: fsutil_abs(&dir.join(METRICS_FILE)),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    manifest.write(&manifest_path)?;
    invoke_trainer(trainer.as_ref(), &manifest_path, &manifest)
}

fn fsutil_abs(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Runs every cell not already completed in the store at `store_path`.
///
/// Failed cells get an error-marked line. On the next run their old line
/// is dropped and they are tried again, so every (model, dataset,
/// condition) triple has at most one line.
pub fn run_matrix(
    cells: &[ExperimentCell],
    trainers: &TrainerRegistry,
    layout: &CorpusLayout,
    store_path: &Path,
    options: &RunOptions,
) -> Result<RunSummary, HarnessError> {
    let existing = read_store(store_path)?;
    let planned: HashSet<_> = cells.iter().map(ExperimentCell::id).collect();
    let stale = existing.iter().any(|r| {
        r.is_failed()
            && planned.contains(&super::CellId {
                model: r.model.clone(),
                dataset: r.dataset.clone(),
                language: r.language.clone(),
            })
    });
    let kept: Vec<&ResultRecord> = existing
        .iter()
        .filter(|r| {
            !(r.is_failed()
                && planned.contains(&super::CellId {
                    model: r.model.clone(),
                    dataset: r.dataset.clone(),
                    language: r.language.clone(),
                }))
        })
        .collect();
    if stale {
        let mut text = String::new();
        for r in &kept {
            text.push_str(&serde_json::to_string(r).expect("records serialize"));
            text.push('\n');
        }
        fsutil::write_atomic(store_path, text.as_bytes())
            .map_err(|e| HarnessError::Io(format!("{}: {e}", store_path.display())))?;
    }
    let done: HashSet<(String, String, String)> = kept
        .iter()
        .filter(|r| !r.is_failed())
        .map(|r| (r.model.clone(), r.dataset.clone(), r.language.clone()))
        .collect();

    let mut seen = HashSet::new();
    let pending: Vec<&ExperimentCell> = cells
        .iter()
        .filter(|c| seen.insert(c.id()))
        .filter(|c| !done.contains(&(c.model.clone(), c.dataset.clone(), c.condition.to_string())))
        .collect();
    let mut summary = RunSummary {
        planned: cells.len(),
        skipped: seen.len() - pending.len(),
        ..RunSummary::default()
    };

    let store_lock = Mutex::new(());
    let cursor = AtomicUsize::new(0);
    let outcome: Mutex<(usize, usize, Option<HarnessError>)> = Mutex::new((0, 0, None));
    std::thread::scope(|scope| {
        for _ in 0..options.workers.max(1).min(pending.len()) {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::SeqCst);
                let Some(cell) = pending.get(i) else { break };
                log::info!("running {cell}");
                let record = match run_cell(cell, trainers.resolve(&cell.model), layout, options) {
                    Ok(m) => ResultRecord::success(&cell.model, &cell.dataset, &cell.condition.to_string(), &m),
                    Err(e) => {
                        log::warn!("{cell} failed: {e}");
                        ResultRecord::failure(&cell.model, &cell.dataset, &cell.condition.to_string(), e.to_string())
                    }
                };
                let _guard = store_lock.lock().expect("store lock");
                let mut out = outcome.lock().expect("outcome lock");
                match append_record(store_path, &record) {
                    Ok(()) if record.is_failed() => out.1 += 1,
                    Ok(()) => out.0 += 1,
                    Err(e) => {
                        out.2.get_or_insert(HarnessError::Store(e));
                    }
                }
            });
        }
    });
    let (succeeded, failed, err) = outcome.into_inner().expect("outcome lock");
    if let Some(e) = err {
        return Err(e);
    }
    summary.succeeded = succeeded;
    summary.failed = failed;
    Ok(summary)
}

//! Offline baseline trainer based on token overlap.
//!
//! Each pair is scored by the Jaccard overlap of its lowercased whitespace
//! tokens. The decision threshold is the dev-set score value that maximizes
//! dev F1 (lowest such value on ties); a test pair is predicted as a
//! paraphrase iff its score reaches the threshold. Nothing here is random.

use std::collections::HashSet;
use std::path::Path;

use super::{Trainer, TrainerError, TrainerManifest};
use crate::corpus::{load_corpus, Corpus, CorpusFormat};
use crate::fsutil;
use crate::metrics::{compute_metrics, EvalMetrics, ResultRecord};

pub fn jaccard(a: &str, b: &str) -> f64 {
    let lower_a = a.to_lowercase();
    let lower_b = b.to_lowercase();
    let ta: HashSet<&str> = lower_a.split_whitespace().collect();
    let tb: HashSet<&str> = lower_b.split_whitespace().collect();
    let union = ta.union(&tb).count();
    if union == 0 {
        return 1.0;
    }
    ta.intersection(&tb).count() as f64 / union as f64
}

fn scores(corpus: &Corpus) -> Vec<(f64, u8)> {
    corpus
        .records
        .iter()
        .map(|r| (jaccard(&r.sentence, &r.paraphrase), r.quality))
        .collect()
}

fn predict(scored: &[(f64, u8)], threshold: f64) -> Vec<u8> {
    scored.iter().map(|&(j, _)| u8::from(j >= threshold)).collect()
}

/// Threshold maximizing F1 over the distinct scores; returns `(threshold, f1)`.
pub fn choose_threshold(dev: &[(f64, u8)]) -> Option<(f64, f64)> {
    let golds: Vec<u8> = dev.iter().map(|&(_, q)| q).collect();
    let mut candidates: Vec<f64> = dev.iter().map(|&(j, _)| j).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best: Option<(f64, f64)> = None;
    for t in candidates {
        let f1 = compute_metrics(&predict(dev, t), &golds).ok()?.f1;
        if best.is_none_or(|(_, b)| f1 > b) {
            best = Some((t, f1));
        }
    }
    best
}

/// Fits the threshold on dev and evaluates on test.
pub fn builtin_overlap_trainer(manifest: &TrainerManifest) -> Result<EvalMetrics, TrainerError> {
    let train = load_corpus(&manifest.files.train, CorpusFormat::Interchange)?;
    let dev = load_corpus(&manifest.files.dev, CorpusFormat::Interchange)?;
    let test = load_corpus(&manifest.files.test, CorpusFormat::Interchange)?;
    for (name, c) in [("train", &train), ("dev", &dev), ("test", &test)] {
        if c.is_empty() {
            return Err(TrainerError::EmptySplit(name));
        }
    }
    let (threshold, _) = choose_threshold(&scores(&dev)).ok_or(TrainerError::EmptySplit("dev"))?;
    let test_scores = scores(&test);
    let golds: Vec<u8> = test_scores.iter().map(|&(_, q)| q).collect();
    compute_metrics(&predict(&test_scores, threshold), &golds).map_err(|e| TrainerError::Schema(e.to_string()))
}

/// In-process [`Trainer`] around [`builtin_overlap_trainer`].
#[derive(Debug, Clone, Copy, Default)]
pub struct OverlapTrainer;

impl OverlapTrainer {
    /// Runs the trainer and writes the metrics record to `manifest.output`.
    pub fn run_manifest(manifest: &TrainerManifest) -> Result<EvalMetrics, TrainerError> {
        let metrics = builtin_overlap_trainer(manifest)?;
        let cell = &manifest.cell;
        let record = ResultRecord::success(&cell.model, &cell.dataset, &cell.language, &metrics);
        let mut json = serde_json::to_string(&record).expect("record serializes");
        json.push('\n');
        fsutil::write_atomic(&manifest.output, json.as_bytes())
            .map_err(|e| TrainerError::Io(format!("{}: {e}", manifest.output.display())))?;
        Ok(metrics)
    }
}

impl Trainer for OverlapTrainer {
    fn name(&self) -> String {
        "builtin-overlap".into()
    }

    fn run(&self, _manifest_path: &Path, manifest: &TrainerManifest) -> Result<(), TrainerError> {
        Self::run_manifest(manifest).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jaccard_extremes() {
        assert_eq!(jaccard("The cat sat", "the CAT sat"), 1.0);
        assert_eq!(jaccard("a b", "c d"), 0.0);
        assert_eq!(jaccard("a b c", "b c d"), 0.5);
    }

    #[test]
    fn threshold_prefers_lowest_on_ties() {
        // Only 0.5 separates the classes.
        let dev = [(0.1, 0), (0.5, 1), (0.9, 1)];
        assert_eq!(choose_threshold(&dev), Some((0.5, 1.0)));
        let dev = [(0.3, 1), (0.3, 0)];
        assert_eq!(choose_threshold(&dev).unwrap().0, 0.3);
        assert_eq!(choose_threshold(&[]), None);
    }
}

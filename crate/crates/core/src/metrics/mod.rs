//! Classification metrics, gains over the baseline, and gain distributions.

mod distribution;
mod report;
mod store;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use distribution::{marginal_gain_distribution, quantile, summarize, Axis, DistributionSummary};
pub use report::{best_by_metric, compute_gains, emit_report, BestEntry, GainTable, ReportFormat};
pub use store::{append_record, read_store, ResultRecord, BASE};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("predictions ({predictions}) and gold labels ({golds}) differ in length")]
    LengthMismatch { predictions: usize, golds: usize },
    #[error("cannot compute metrics on an empty evaluation set")]
    Empty,
    #[error("label {0} is not 0 or 1")]
    NonBinary(u8),
    #[error("evaluations were computed on different test sets ({augmented} vs {baseline} pairs)")]
    IncompatibleEvaluation { augmented: usize, baseline: usize },
    #[error("unknown metric `{0}` (expected accuracy, precision, recall or f1)")]
    UnknownMetric(String),
    #[error("unknown axis `{0}` (expected dataset, language or model)")]
    UnknownAxis(String),
    #[error("no gain records for metric {0}")]
    NoRecords(Metric),
    #[error("results store line {line}: {reason}")]
    Store { line: usize, reason: String },
    #[error("{0}")]
    Io(String),
}

/// Confusion counts with quality 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_test: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<ConfusionCounts>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl EvalMetrics {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let precision = ratio(counts.tp, counts.tp + counts.fp);
        let recall = ratio(counts.tp, counts.tp + counts.fn_);
        Self {
            accuracy: ratio(counts.tp + counts.tn, counts.total()),
            precision,
            recall,
            f1: f1_score(precision, recall),
            n_test: counts.total(),
            counts: Some(counts),
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
        }
    }
}

pub fn compute_metrics(predictions: &[u8], golds: &[u8]) -> Result<EvalMetrics, MetricsError> {
    if predictions.len() != golds.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            golds: golds.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut c = ConfusionCounts::default();
    for (&p, &g) in predictions.iter().zip(golds) {
        match (p, g) {
            (1, 1) => c.tp += 1,
            (1, 0) => c.fp += 1,
            (0, 1) => c.fn_ += 1,
            (0, 0) => c.tn += 1,
            (x, y) => return Err(MetricsError::NonBinary(if x > 1 { x } else { y })),
        }
    }
    Ok(EvalMetrics::from_counts(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Accuracy,
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Accuracy, Metric::Precision, Metric::Recall, Metric::F1];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "acc" | "accuracy" => Ok(Metric::Accuracy),
            "p" | "precision" => Ok(Metric::Precision),
            "r" | "recall" => Ok(Metric::Recall),
            "f1" | "f" => Ok(Metric::F1),
            _ => Err(MetricsError::UnknownMetric(s.to_string())),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// `m(augmented) - m(baseline)`, unclamped.
pub fn gain(augmented: &EvalMetrics, baseline: &EvalMetrics, metric: Metric) -> Result<f64, MetricsError> {
    if augmented.n_test != baseline.n_test {
        return Err(MetricsError::IncompatibleEvaluation {
            augmented: augmented.n_test,
            baseline: baseline.n_test,
        });
    }
    Ok(augmented.get(metric) - baseline.get(metric))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRecord {
    pub model: String,
    pub dataset: String,
    pub language: String,
    pub metric: Metric,
    /// Metric value of the augmented run.
    pub value: f64,
    pub gain: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reported(acc: f64, p: f64, r: f64, f1: f64) -> EvalMetrics {
        EvalMetrics {
            accuracy: acc,
            precision: p,
            recall: r,
            f1,
            n_test: 1725,
            counts: None,
        }
    }

    #[test]
    fn all_negative_predictions() {
        // 813 of 1000 gold labels negative, every prediction negative.
        let golds: Vec<u8> = (0..1000).map(|i| u8::from(i >= 813)).collect();
        let m = compute_metrics(&vec![0; 1000], &golds).unwrap();
        assert!((m.accuracy - 0.813).abs() < 1e-12);
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn perfect_predictions() {
        let g = [1, 0, 1, 1, 0];
        let m = compute_metrics(&g, &g).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(
            m.counts.unwrap(),
            ConfusionCounts {
                tp: 3,
                fp: 0,
                fn_: 0,
                tn: 2
            }
        );
    }

    #[test]
    fn f1_from_rounded_precision_recall() {
        assert!((f1_score(0.820, 0.899) - 0.858).abs() <= 0.001);
    }

    #[test]
    fn input_errors() {
        assert_eq!(
            compute_metrics(&[1], &[1, 0]),
            Err(MetricsError::LengthMismatch {
                predictions: 1,
                golds: 2
            })
        );
        assert_eq!(compute_metrics(&[], &[]), Err(MetricsError::Empty));
        assert_eq!(compute_metrics(&[2], &[1]), Err(MetricsError::NonBinary(2)));
    }

    #[test]
    fn gains_from_reported_values() {
        let bert_base = reported(0.802, 0.820, 0.899, 0.858);
        let bert_es = reported(0.835, 0.840, 0.929, 0.882);
        assert!((gain(&bert_es, &bert_base, Metric::Accuracy).unwrap() - 0.033).abs() < 1e-12);
        let rob_base = reported(0.874, 0.898, 0.914, 0.906);
        let rob_vi = reported(0.886, 0.906, 0.925, 0.915);
        assert!((gain(&rob_vi, &rob_base, Metric::F1).unwrap() - 0.009).abs() < 1e-12);
        for m in Metric::ALL {
            assert_eq!(gain(&bert_base, &bert_base, m).unwrap(), 0.0);
        }
        let other = EvalMetrics { n_test: 10, ..bert_es };
        assert!(matches!(
            gain(&other, &bert_base, Metric::F1),
            Err(MetricsError::IncompatibleEvaluation { .. })
        ));
    }

    #[test]
    fn metric_names() {
        assert_eq!("Acc".parse::<Metric>().unwrap(), Metric::Accuracy);
        assert_eq!("F1".parse::<Metric>().unwrap(), Metric::F1);
        assert!("auc".parse::<Metric>().is_err());
    }
}

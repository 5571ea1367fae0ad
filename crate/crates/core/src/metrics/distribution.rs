//! Marginal gain distributions and box-plot summaries.
//!
//! Quartiles use linear interpolation between order statistics (position
//! `p * (n - 1)` in the sorted sample). Whiskers reach the most extreme
//! values inside `[q1 - 1.5 * IQR, q3 + 1.5 * IQR]`; anything beyond is an
//! outlier.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GainRecord, Metric, MetricsError};

const WHISKER_IQR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Dataset,
    Language,
    Model,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Dataset, Axis::Language, Axis::Model];

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Dataset => "dataset",
            Axis::Language => "language",
            Axis::Model => "model",
        }
    }

    pub fn key(self, r: &GainRecord) -> &str {
        match self {
            Axis::Dataset => &r.dataset,
            Axis::Language => &r.language,
            Axis::Model => &r.model,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dataset" | "d" => Ok(Axis::Dataset),
            "language" | "lang" | "l" => Ok(Axis::Language),
            "model" | "sigma" => Ok(Axis::Model),
            _ => Err(MetricsError::UnknownAxis(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Linear-interpolation quantile of an ascending, non-empty sample.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summary of a non-empty sample; `None` when empty.
pub fn summarize(values: &[f64]) -> Option<DistributionSummary> {
    if values.is_empty() {
        return None;
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = quantile(&s, 0.25);
    let q3 = quantile(&s, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - WHISKER_IQR * iqr, q3 + WHISKER_IQR * iqr);
    let inside: Vec<f64> = s
        .iter()
        .copied()
        .filter(|v| (lo_fence..=hi_fence).contains(v))
        .collect();
    let outliers: Vec<f64> = s
        .iter()
        .copied()
        .filter(|v| !(lo_fence..=hi_fence).contains(v))
        .collect();
    Some(DistributionSummary {
        n: s.len(),
        mean: s.iter().sum::<f64>() / s.len() as f64,
        median: quantile(&s, 0.5),
        q1,
        q3,
        min: s[0],
        max: s[s.len() - 1],
        whisker_low: inside.first().copied().unwrap_or(q1),
        whisker_high: inside.last().copied().unwrap_or(q3),
        outliers,
    })
}

/// Pools the gains of `metric` by the value each record takes on `axis`;
/// every other axis is left free.
pub fn marginal_gain_distribution(
    records: &[GainRecord],
    axis: Axis,
    metric: Metric,
) -> Result<BTreeMap<String, DistributionSummary>, MetricsError> {
    let mut buckets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.metric == metric) {
        buckets.entry(axis.key(r).to_string()).or_default().push(r.gain);
    }
    if buckets.is_empty() {
        return Err(MetricsError::NoRecords(metric));
    }
    Ok(buckets
        .into_iter()
        .map(|(k, v)| (k, summarize(&v).expect("buckets are non-empty")))
        .collect())
}

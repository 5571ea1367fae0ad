//! Gain tables and report rendering (CSV, markdown, box-plot JSON).

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::distribution::{marginal_gain_distribution, Axis, DistributionSummary};
use super::store::{ResultRecord, BASE};
use super::{gain, GainRecord, Metric, MetricsError};

pub const CSV_HEADER: [&str; 6] = ["model", "dataset", "language", "metric", "value", "gain"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    BoxplotJson,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
            ReportFormat::BoxplotJson => "boxplot.json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "boxplot-json" | "boxplot" | "json" => Ok(ReportFormat::BoxplotJson),
            _ => Err(format!(
                "unknown report format `{s}` (expected csv, md or boxplot-json)"
            )),
        }
    }
}

fn condition_rank(language: &str) -> u8 {
    match language {
        BASE => 0,
        "all" => 1,
        _ => 2,
    }
}

/// Canonical row order: dataset, model, then base, all, and languages by code.
fn canonical(a: &ResultRecord, b: &ResultRecord) -> Ordering {
    a.dataset
        .cmp(&b.dataset)
        .then_with(|| a.model.cmp(&b.model))
        .then_with(|| condition_rank(&a.language).cmp(&condition_rank(&b.language)))
        .then_with(|| a.language.cmp(&b.language))
}

fn successful_sorted(results: &[ResultRecord]) -> Vec<&ResultRecord> {
    let mut rows: Vec<&ResultRecord> = results.iter().filter(|r| !r.is_failed()).collect();
    rows.sort_by(|a, b| canonical(a, b));
    rows
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GainTable {
    pub gains: Vec<GainRecord>,
    /// Rows that could not be compared (no baseline, duplicates).
    pub warnings: Vec<String>,
}

/// Gains of every non-base row against the base row of the same model and
/// dataset, for each metric.
pub fn compute_gains(results: &[ResultRecord]) -> Result<GainTable, MetricsError> {
    let rows = successful_sorted(results);
    let mut table = GainTable::default();
    let mut baselines = HashMap::new();
    for r in rows.iter().filter(|r| r.is_base()) {
        if baselines.insert((r.model.as_str(), r.dataset.as_str()), *r).is_some() {
            table.warnings.push(format!(
                "duplicate baseline for {}/{}; using the last one",
                r.model, r.dataset
            ));
        }
    }
    let mut last: Option<(&str, &str, &str)> = None;
    for r in rows.iter().filter(|r| !r.is_base()) {
        if last == Some(r.triple()) {
            table.warnings.push(format!(
                "duplicate row {}/{}/{}; ignoring",
                r.model, r.dataset, r.language
            ));
            continue;
        }
        last = Some(r.triple());
        let Some(base) = baselines.get(&(r.model.as_str(), r.dataset.as_str())) else {
            table.warnings.push(format!(
                "no baseline for {}/{}; skipping {}",
                r.model, r.dataset, r.language
            ));
            continue;
        };
        let (aug_m, base_m) = (r.metrics().expect("validated"), base.metrics().expect("validated"));
        for metric in Metric::ALL {
            table.gains.push(GainRecord {
                model: r.model.clone(),
                dataset: r.dataset.clone(),
                language: r.language.clone(),
                metric,
                value: aug_m.get(metric),
                gain: gain(&aug_m, &base_m, metric)?,
            });
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestEntry {
    pub language: String,
    pub value: f64,
}

/// For each `(model, dataset)` group, the condition with the highest
/// `metric`; ties go to the smaller language code.
pub fn best_by_metric(results: &[ResultRecord], metric: Metric) -> BTreeMap<(String, String), BestEntry> {
    let mut best: BTreeMap<(String, String), BestEntry> = BTreeMap::new();
    for r in results.iter().filter(|r| !r.is_failed()) {
        let value = r.metrics().expect("validated").get(metric);
        let key = (r.model.clone(), r.dataset.clone());
        let replace = match best.get(&key) {
            None => true,
            Some(cur) => value > cur.value || (value == cur.value && r.language < cur.language),
        };
        if replace {
            best.insert(
                key,
                BestEntry {
                    language: r.language.clone(),
                    value,
                },
            );
        }
    }
    best
}

#[derive(Serialize)]
struct BoxplotGroup<'a> {
    axis: &'a str,
    metric: Metric,
    groups: BTreeMap<String, DistributionSummary>,
}

/// Renders a report. Output depends only on the input rows, not on their
/// order in the store.
pub fn emit_report(
    results: &[ResultRecord],
    format: ReportFormat,
    axis: Option<Axis>,
    metric: Option<Metric>,
) -> Result<String, MetricsError> {
    let table = compute_gains(results)?;
    let metrics: Vec<Metric> = metric.map_or_else(|| Metric::ALL.to_vec(), |m| vec![m]);
    match format {
        ReportFormat::Csv => Ok(render_csv(&table.gains, &metrics)),
        ReportFormat::Markdown => Ok(render_markdown(results, &table.gains)),
        ReportFormat::BoxplotJson => {
            let axes: Vec<Axis> = axis.map_or_else(|| Axis::ALL.to_vec(), |a| vec![a]);
            let mut out = Vec::new();
            for a in &axes {
                for &m in &metrics {
                    match marginal_gain_distribution(&table.gains, *a, m) {
                        Ok(groups) => out.push(BoxplotGroup {
                            axis: a.as_str(),
                            metric: m,
                            groups,
                        }),
                        Err(MetricsError::NoRecords(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            let mut json = serde_json::to_string_pretty(&out).expect("summaries serialize");
            json.push('\n');
            Ok(json)
        }
    }
}

fn render_csv(gains: &[GainRecord], metrics: &[Metric]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for g in gains.iter().filter(|g| metrics.contains(&g.metric)) {
        w.write_record([
            g.model.as_str(),
            g.dataset.as_str(),
            g.language.as_str(),
            g.metric.as_str(),
            &g.value.to_string(),
            &g.gain.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn render_markdown(results: &[ResultRecord], gains: &[GainRecord]) -> String {
    let mut out = String::from(
        "## Results\n\n| Model | Dataset | Condition | Acc | F1 | P | R |\n|---|---|---|---|---|---|---|\n",
    );
    for r in successful_sorted(results) {
        let m = r.metrics().expect("validated");
        let _ = writeln!(
            out,
            "| {} | {} | {} | {:.3} | {:.3} | {:.3} | {:.3} |",
            r.model, r.dataset, r.language, m.accuracy, m.f1, m.precision, m.recall
        );
    }
    out.push_str(
        "\n## Gains over base\n\n| Model | Dataset | Condition | Acc | F1 | P | R |\n|---|---|---|---|---|---|---|\n",
    );
    for row in gains.chunks(Metric::ALL.len()) {
        let get = |m: Metric| row.iter().find(|g| g.metric == m).map_or(0.0, |g| g.gain);
        let _ = writeln!(
            out,
            "| {} | {} | {} | {:+.3} | {:+.3} | {:+.3} | {:+.3} |",
            row[0].model,
            row[0].dataset,
            row[0].language,
            get(Metric::Accuracy),
            get(Metric::F1),
            get(Metric::Precision),
            get(Metric::Recall)
        );
    }
    out
}

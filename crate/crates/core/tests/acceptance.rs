//! Acceptance checks. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion does.

mod common;

use std::collections::HashSet;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use betkit::augment::{augment_corpus, normalize_for_match};
use betkit::corpus::{downsample_balanced, to_interchange, write_corpus, SplitTag};
use betkit::metrics::{f1_score, read_store, ResultRecord};
use betkit::translate::{BackendError, BackendPolicy, TranslationBackend, TranslationRequest, Translator};
use common::{fast_policy, fixture, full_lexicon, mock_translator, synthetic_corpus};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn betkit(dir: &Path, args: &[&str]) -> Result<std::process::Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_betkit"))
        .args(args)
        .current_dir(dir)
        .env_remove("BET_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "betkit {} exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out)
}

fn table_one() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = betkit(dir.path(), &["langfam", "-k", "10", "--tsv"])?;
    let elapsed = start.elapsed();
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let rows: Vec<(String, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            (cols[1].to_string(), cols[4].parse().unwrap_or(f64::NAN))
        })
        .collect();
    let want = [
        ("zh", 1200.0),
        ("es", 483.0),
        ("ar", 310.0),
        ("ja", 125.0),
        ("te", 82.0),
        ("jv", 82.0),
        ("ko", 77.2),
        ("vi", 76.0),
        ("tr", 75.7),
        ("yo", 40.0),
    ];
    let want: Vec<(String, f64)> = want.iter().map(|(c, s)| (c.to_string(), *s)).collect();
    ensure!(rows == want, "got {rows:?}");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("10 rows exact in {elapsed:?}"))
}

fn gain_arithmetic() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store_path = fixture("mrpc_full.jsonl");
    betkit(
        dir.path(),
        &[
            "analyze",
            "--store",
            store_path.to_str().unwrap(),
            "--axis",
            "language",
            "-o",
            "rep",
        ],
    )?;
    let csv = std::fs::read_to_string(dir.path().join("rep/gains.csv")).map_err(|e| e.to_string())?;
    let store = read_store(&store_path).map_err(|e| e.to_string())?;
    let value = |model: &str, lang: &str, metric: &str| -> f64 {
        let r = store.iter().find(|r| r.model == model && r.language == lang).unwrap();
        match metric {
            "accuracy" => r.accuracy.unwrap(),
            _ => r.f1.unwrap(),
        }
    };
    let mut shown = Vec::new();
    for (model, lang, metric, published) in [
        ("bert", "es", "accuracy", 0.033),
        ("bert", "es", "f1", 0.024),
        ("roberta", "vi", "f1", 0.009),
    ] {
        let prefix = format!("{model},mrpc,{lang},{metric},");
        let line = csv
            .lines()
            .find(|l| l.starts_with(&prefix))
            .ok_or(format!("no row {prefix}"))?;
        let reported: f64 = line.rsplit(',').next().unwrap().parse().map_err(|e| format!("{e}"))?;
        let exact = value(model, lang, metric) - value(model, "base", metric);
        ensure!((reported - exact).abs() <= 1e-9, "{prefix} {reported} vs {exact}");
        ensure!(
            (reported - published).abs() <= 1e-9,
            "{prefix} {reported} vs {published}"
        );
        shown.push(format!("{model}/{lang}/{metric} {reported:+.3}"));
    }
    Ok(shown.join(", "))
}

fn metric_consistency() -> Outcome {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut rows: Vec<ResultRecord> = Vec::new();
    for name in ["mrpc_full.jsonl", "downsampled.jsonl"] {
        rows.extend(read_store(&fixture(name)).map_err(|e| e.to_string())?);
    }
    ensure!(rows.len() == 32, "expected 32 published rows, found {}", rows.len());
    for r in &rows {
        let (p, rc, f1) = (r.precision.unwrap(), r.recall.unwrap(), r.f1.unwrap());
        if p + rc > 0.0 {
            let dev = (2.0 * p * rc / (p + rc) - f1).abs();
            ensure!(dev <= 0.002, "{}/{}/{}: off by {dev}", r.model, r.dataset, r.language);
            worst = worst.max(dev);
            checked += 1;
        }
    }
    let zero = rows
        .iter()
        .find(|r| r.model == "bert" && r.dataset == "mrpc-100" && r.language == "base")
        .ok_or("downsampled MRPC BERT base row missing")?;
    ensure!(
        zero.precision == Some(0.0) && zero.recall == Some(0.0) && zero.f1 == Some(0.0),
        "zero row is {zero:?}"
    );
    ensure!(f1_score(0.0, 0.0) == 0.0, "zero-denominator convention broken");
    Ok(format!("{checked} rows, max deviation {worst:.4}; zero row holds"))
}

fn downsampling() -> Outcome {
    let corpus = synthetic_corpus(600, 400, SplitTag::Train);
    ensure!(corpus.len() == 1000, "fixture size {}", corpus.len());
    let a = downsample_balanced(&corpus, 50, 42).map_err(|e| e.to_string())?;
    let b = downsample_balanced(&corpus, 50, 42).map_err(|e| e.to_string())?;
    ensure!(a.count_label(1) == 50 && a.count_label(0) == 50, "unbalanced sample");
    let ids: HashSet<&str> = corpus.records.iter().map(|r| r.id.as_str()).collect();
    ensure!(
        a.records.iter().all(|r| ids.contains(r.id.as_str())),
        "sample is not a subset"
    );
    ensure!(
        to_interchange(&a).as_bytes() == to_interchange(&b).as_bytes(),
        "runs differ"
    );
    Ok("50/50, subset, byte-identical".into())
}

fn filter_property() -> Outcome {
    let langs: Vec<String> = ["zh", "es", "ar"].iter().map(|s| s.to_string()).collect();
    for (pos, neg) in [(50, 50), (7, 3), (1, 0)] {
        let train = synthetic_corpus(pos, neg, SplitTag::Train);
        let out =
            augment_corpus(&train, &langs, &mock_translator(0.0, full_lexicon()), "en").map_err(|e| e.to_string())?;
        ensure!(out.manifest.counts.values().all(|c| c.kept == 0), "rate 0 kept records");
    }
    let train = synthetic_corpus(50, 50, SplitTag::Train);
    let out = augment_corpus(&train, &langs, &mock_translator(1.0, full_lexicon()), "en").map_err(|e| e.to_string())?;
    ensure!(
        out.combined_all.len() == 400,
        "combined_all has {}",
        out.combined_all.len()
    );
    for (_, c) in &out.per_language {
        for r in &c.records {
            let src_id = r.id.rsplit_once('#').map(|(s, _)| s).unwrap_or("");
            let src = train.records.iter().find(|o| o.id == src_id).ok_or("orphan record")?;
            ensure!(
                r.sentence.as_bytes() == src.sentence.as_bytes(),
                "sentence changed in {}",
                r.id
            );
            ensure!(r.quality == src.quality, "label changed in {}", r.id);
            ensure!(
                normalize_for_match(&r.paraphrase) != normalize_for_match(&src.paraphrase),
                "{} duplicates its original",
                r.id
            );
        }
    }
    Ok("rate 0 keeps none; rate 1 gives 400 records".into())
}

/// Runs the offline pipeline through the CLI in `dir`; returns the store
/// without timestamps and the three report files.
fn pipeline(dir: &Path) -> Result<(Vec<ResultRecord>, Vec<Vec<u8>>), String> {
    write_corpus(&synthetic_corpus(180, 120, SplitTag::Unsplit), &dir.join("syn.jsonl")).map_err(|e| e.to_string())?;
    betkit(
        dir,
        &[
            "split",
            "-i",
            "syn.jsonl",
            "--out-dir",
            "data/syn",
            "--test-fraction",
            "0.2",
        ],
    )?;
    betkit(
        dir,
        &[
            "augment",
            "--train",
            "data/syn/train.jsonl",
            "--dataset",
            "syn",
            "--languages",
            "zh,es",
            "--backend",
            "mock",
            "--substitution-rate",
            "0.5",
            "--max-rps",
            "1000000",
        ],
    )?;
    betkit(
        dir,
        &[
            "run",
            "--models",
            "overlap",
            "--datasets",
            "syn",
            "--conditions",
            "base,zh,es,all",
            "--workers",
            "2",
        ],
    )?;
    betkit(dir, &["analyze", "-o", "reports"])?;
    let raw = std::fs::read_to_string(dir.join("results.jsonl")).map_err(|e| e.to_string())?;
    ensure!(raw.lines().count() == 4, "store has {} lines", raw.lines().count());
    let mut store = read_store(&dir.join("results.jsonl")).map_err(|e| e.to_string())?;
    ensure!(store.iter().all(|r| !r.is_failed()), "a cell failed: {store:?}");
    for r in &mut store {
        r.timestamp.clear();
    }
    store.sort_by(|a, b| a.language.cmp(&b.language));
    let mut reports = Vec::new();
    for name in ["gains.csv", "gains.md", "gains.boxplot.json"] {
        reports.push(std::fs::read(dir.join("reports").join(name)).map_err(|e| e.to_string())?);
    }
    Ok((store, reports))
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = pipeline(a.path())?;
    let second = pipeline(b.path())?;
    let elapsed = start.elapsed();
    ensure!(first == second, "two runs differ");
    let csv = String::from_utf8_lossy(&first.1[0]);
    ensure!(
        csv.lines().count() == 1 + 3 * 4,
        "gain CSV has {} lines",
        csv.lines().count()
    );
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "4-line store, identical reports across runs, {elapsed:?} for two runs"
    ))
}

struct FlakyCounter {
    failures: u64,
    calls: AtomicU64,
}

impl TranslationBackend for FlakyCounter {
    fn id(&self) -> String {
        "flaky-counter".into()
    }

    fn translate(&self, r: &TranslationRequest) -> Result<String, BackendError> {
        if self.calls.fetch_add(1, Ordering::SeqCst) < self.failures {
            Err(BackendError::Transport("503".into()))
        } else {
            Ok(r.text.to_uppercase())
        }
    }
}

fn cache_and_retry() -> Outcome {
    let backend = Arc::new(FlakyCounter {
        failures: 0,
        calls: AtomicU64::new(0),
    });
    let t = Translator::uncached(backend.clone(), fast_policy()).map_err(|e| e.to_string())?;
    let req = TranslationRequest::new("same request", "en", "vi");
    for _ in 0..5 {
        t.translate(&req).map_err(|e| e.to_string())?;
    }
    let calls = backend.calls.load(Ordering::SeqCst);
    ensure!(calls == 1, "identical request reached the backend {calls} times");

    let flaky = Arc::new(FlakyCounter {
        failures: 3,
        calls: AtomicU64::new(0),
    });
    let policy = BackendPolicy {
        max_retries: 3,
        ..fast_policy()
    };
    let t = Translator::uncached(flaky.clone(), policy).map_err(|e| e.to_string())?;
    let out = t.translate(&req).map_err(|e| e.to_string())?;
    let calls = flaky.calls.load(Ordering::SeqCst);
    ensure!(out == "SAME REQUEST", "unexpected output {out}");
    ensure!(calls == 4, "expected 4 invocations, saw {calls}");
    Ok("1 call for 5 identical requests; 3 failures + 1 success = 4 calls".into())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 7] = [
        ("language selection reproduces the published top-10 table", table_one),
        ("gain arithmetic on the full-MRPC fixture", gain_arithmetic),
        ("F1 consistency of published rows", metric_consistency),
        ("balanced downsampling", downsampling),
        ("exact-match filter after mock augmentation", filter_property),
        ("offline end-to-end grid with the overlap trainer", end_to_end),
        ("translation cache and retry counts", cache_and_retry),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}

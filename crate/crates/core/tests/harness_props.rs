mod common;

use std::collections::{BTreeSet, HashSet};
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use betkit::augment::{augment_corpus, write_augmentation};
use betkit::corpus::{
    downsample_balanced, load_corpus, split_test, split_train_dev, write_corpus, CorpusFormat, SplitTag,
};
use betkit::harness::{
    choose_threshold, invoke_trainer, jaccard, plan_matrix, run_matrix, CommandTrainer, CorpusLayout, ExperimentCell,
    OverlapTrainer, RunOptions, Trainer, TrainerError, TrainerManifest, TrainerRegistry, TrainerSettings,
};
use betkit::metrics::{compute_metrics, read_store, ResultRecord};
use common::{full_lexicon, mock_translator, synthetic_corpus};
use proptest::prelude::*;

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
    layout: CorpusLayout,
}

impl Workspace {
    /// Dataset `syn` split into train/dev/test, augmented through zh and es.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let layout = CorpusLayout {
            data_dir: root.join("data"),
            augmented_dir: root.join("augmented"),
        };
        let corpus = synthetic_corpus(60, 40, SplitTag::Unsplit);
        let (rest, test) = split_test(&corpus, 0.2, 42).unwrap();
        let (train, dev) = split_train_dev(&rest, 0.2, 42).unwrap();
        for (name, c) in [("train", &train), ("dev", &dev), ("test", &test)] {
            write_corpus(c, &layout.split_file("syn", name)).unwrap();
        }
        let out = augment_corpus(&train, &s(&["zh", "es"]), &mock_translator(0.5, full_lexicon()), "en").unwrap();
        write_augmentation(&layout.augmented_dir, "syn", &out).unwrap();
        Self {
            _dir: dir,
            root,
            layout,
        }
    }

    fn options(&self, workers: usize) -> RunOptions {
        RunOptions {
            work_dir: self.root.join("work"),
            workers,
            settings: TrainerSettings::default(),
        }
    }

    fn store(&self) -> PathBuf {
        self.root.join("results.jsonl")
    }

    fn script(&self, name: &str, body: &str) -> String {
        let path = self.root.join(name);
        std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        path.display().to_string()
    }
}

/// Counts invocations and remembers the train ids of each manifest.
#[derive(Default)]
struct Recording {
    calls: AtomicUsize,
    train_ids: Mutex<Vec<BTreeSet<String>>>,
}

impl Trainer for Recording {
    fn name(&self) -> String {
        "recording".into()
    }

    fn run(&self, path: &Path, manifest: &TrainerManifest) -> Result<(), TrainerError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let train = load_corpus(&manifest.files.train, CorpusFormat::Interchange)?;
        self.train_ids
            .lock()
            .unwrap()
            .push(train.records.iter().map(|r| r.id.clone()).collect());
        OverlapTrainer.run(path, manifest)
    }
}

fn registry(t: Arc<dyn Trainer>) -> TrainerRegistry {
    TrainerRegistry::with_fallback(t)
}

fn triples(store: &[ResultRecord]) -> HashSet<(String, String, String)> {
    store
        .iter()
        .map(|r| (r.model.clone(), r.dataset.clone(), r.language.clone()))
        .collect()
}

#[test]
fn rerun_of_completed_store_invokes_nothing() {
    let ws = Workspace::new();
    let cells = plan_matrix(&s(&["m1", "m2"]), &s(&["syn"]), &s(&["base", "zh", "es", "all"])).unwrap();
    let trainer = Arc::new(Recording::default());
    let first = run_matrix(
        &cells,
        &registry(trainer.clone()),
        &ws.layout,
        &ws.store(),
        &ws.options(3),
    )
    .unwrap();
    assert_eq!((first.succeeded, first.failed, first.skipped), (8, 0, 0));
    assert_eq!(trainer.calls.load(Ordering::SeqCst), 8);
    let before = std::fs::read(ws.store()).unwrap();

    let second = run_matrix(
        &cells,
        &registry(trainer.clone()),
        &ws.layout,
        &ws.store(),
        &ws.options(3),
    )
    .unwrap();
    assert_eq!(second.skipped, 8);
    assert_eq!(trainer.calls.load(Ordering::SeqCst), 8);
    assert_eq!(std::fs::read(ws.store()).unwrap(), before);

    // Recount by reading the store back.
    let store = read_store(&ws.store()).unwrap();
    assert_eq!(store.len(), cells.len());
    assert_eq!(triples(&store).len(), cells.len());
}

#[test]
fn only_missing_cells_run() {
    let ws = Workspace::new();
    let cells = plan_matrix(&s(&["m"]), &s(&["syn"]), &s(&["base", "zh"])).unwrap();
    let done = compute_metrics(&[1, 0], &[1, 0]).unwrap();
    betkit::metrics::append_record(&ws.store(), &ResultRecord::success("m", "syn", "base", &done)).unwrap();
    let trainer = Arc::new(Recording::default());
    let summary = run_matrix(
        &cells,
        &registry(trainer.clone()),
        &ws.layout,
        &ws.store(),
        &ws.options(1),
    )
    .unwrap();
    assert_eq!(trainer.calls.load(Ordering::SeqCst), 1);
    assert_eq!((summary.planned, summary.skipped, summary.succeeded), (2, 1, 1));
    assert_eq!(read_store(&ws.store()).unwrap().len(), 2);
}

#[test]
fn language_cell_trains_on_original_plus_augmented() {
    let ws = Workspace::new();
    let cells = plan_matrix(&s(&["m"]), &s(&["syn"]), &s(&["base", "zh", "all"])).unwrap();
    let trainer = Arc::new(Recording::default());
    run_matrix(
        &cells,
        &registry(trainer.clone()),
        &ws.layout,
        &ws.store(),
        &ws.options(1),
    )
    .unwrap();
    let ids = |p: PathBuf| -> BTreeSet<String> {
        load_corpus(&p, CorpusFormat::Interchange)
            .unwrap()
            .records
            .into_iter()
            .map(|r| r.id)
            .collect()
    };
    let original = ids(ws.layout.split_file("syn", "train"));
    let zh = ids(ws.layout.augmented_file("syn", "zh"));
    let all = ids(ws.layout.augmented_file("syn", "all"));
    let seen = trainer.train_ids.lock().unwrap();
    assert_eq!(seen[0], original);
    assert_eq!(seen[1], original.union(&zh).cloned().collect());
    assert_eq!(seen[2], all);
}

#[test]
fn adapter_sees_exactly_the_downsampled_ids() {
    let ws = Workspace::new();
    let big = synthetic_corpus(300, 200, SplitTag::Train);
    let small = downsample_balanced(&big, 50, 42).unwrap();
    write_corpus(&small, &ws.layout.split_file("ds", "train")).unwrap();
    for split in ["dev", "test"] {
        std::fs::copy(ws.layout.split_file("syn", split), ws.layout.split_file("ds", split)).unwrap();
    }
    let cells = plan_matrix(&s(&["m"]), &s(&["ds"]), &s(&["base"])).unwrap();
    let trainer = Arc::new(Recording::default());
    run_matrix(
        &cells,
        &registry(trainer.clone()),
        &ws.layout,
        &ws.store(),
        &ws.options(1),
    )
    .unwrap();
    let expected: BTreeSet<String> = small.records.iter().map(|r| r.id.clone()).collect();
    assert_eq!(expected.len(), 100);
    assert_eq!(trainer.train_ids.lock().unwrap()[0], expected);
}

#[test]
fn stub_adapter_record_round_trips() {
    let ws = Workspace::new();
    let cmd = ws.script(
        "stub.sh",
        r#"out=$(sed -n 's/.*"output": *"\([^"]*\)".*/\1/p' "$1")
model=$(sed -n 's/.*"model": *"\([^"]*\)".*/\1/p' "$1")
lang=$(sed -n 's/.*"language": *"\([^"]*\)".*/\1/p' "$1")
printf '{"model":"%s","dataset":"syn","language":"%s","accuracy":0.75,"precision":0.5,"recall":1.0,"f1":0.6666666666666666,"n_test":20}\n' "$model" "$lang" > "$out""#,
    );
    let trainer = Arc::new(CommandTrainer::parse(&cmd, Duration::from_secs(30)).unwrap());
    let cells = plan_matrix(&s(&["stub"]), &s(&["syn"]), &s(&["base", "es"])).unwrap();
    let summary = run_matrix(&cells, &registry(trainer), &ws.layout, &ws.store(), &ws.options(2)).unwrap();
    assert_eq!(summary.succeeded, 2);
    let store = read_store(&ws.store()).unwrap();
    for r in &store {
        let m = r.metrics().unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.n_test), (0.75, 0.5, 1.0, 20));
    }
    let manifest = TrainerManifest::read(&ws.root.join("work/syn/stub/es/manifest.json")).unwrap();
    assert_eq!(manifest.config.batch_size, 32);
}

type ErrorCheck = fn(&TrainerError) -> bool;

#[test]
fn adapter_failures_are_recorded_then_retried() {
    let ws = Workspace::new();
    let cells = plan_matrix(&s(&["bad"]), &s(&["syn"]), &s(&["base"])).unwrap();
    let attempts: [(&str, ErrorCheck); 4] = [
        (
            "printf 'not json' > \"$(sed -n 's/.*\"output\": *\"\\([^\"]*\\)\".*/\\1/p' \"$1\")\"",
            |e| matches!(e, TrainerError::Schema(_)),
        ),
        ("exit 3", |e| matches!(e, TrainerError::NonZeroExit(_))),
        ("true", |e| matches!(e, TrainerError::MissingOutput(_))),
        ("sleep 5", |e| matches!(e, TrainerError::Timeout(_))),
    ];
    for (i, (body, check)) in attempts.iter().enumerate() {
        let cmd = ws.script(&format!("bad{i}.sh"), body);
        let trainer = CommandTrainer::parse(&cmd, Duration::from_millis(300)).unwrap();

        let cell = &cells[0];
        let dir = ws.root.join(format!("direct{i}"));
        std::fs::create_dir_all(&dir).unwrap();
        let manifest = TrainerManifest {
            cell: cell.id(),
            files: betkit::harness::ManifestFiles {
                train: ws.layout.split_file("syn", "train"),
                dev: ws.layout.split_file("syn", "dev"),
                test: ws.layout.split_file("syn", "test"),
            },
            config: TrainerSettings::default().config_for("bad"),
            output: dir.join("metrics.json"),
        };
        let mpath = dir.join("manifest.json");
        manifest.write(&mpath).unwrap();
        let err = invoke_trainer(&trainer, &mpath, &manifest).unwrap_err();
        assert!(check(&err), "{body}: {err:?}");

        let summary = run_matrix(
            &cells,
            &registry(Arc::new(trainer)),
            &ws.layout,
            &ws.store(),
            &ws.options(1),
        )
        .unwrap();
        assert_eq!(summary.failed, 1);
        let store = read_store(&ws.store()).unwrap();
        assert_eq!(store.len(), 1, "failed line is replaced, not duplicated");
        assert!(store[0].is_failed());
    }
    let fixed = Arc::new(Recording::default());
    run_matrix(
        &cells,
        &registry(fixed.clone()),
        &ws.layout,
        &ws.store(),
        &ws.options(1),
    )
    .unwrap();
    let store = read_store(&ws.store()).unwrap();
    assert_eq!(store.len(), 1);
    assert!(!store[0].is_failed());
    assert_eq!(fixed.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn wrong_cell_in_record_is_schema_error() {
    let ws = Workspace::new();
    let cmd = ws.script(
        "liar.sh",
        r#"out=$(sed -n 's/.*"output": *"\([^"]*\)".*/\1/p' "$1")
printf '{"model":"other","dataset":"syn","language":"base","accuracy":1,"precision":1,"recall":1,"f1":1,"n_test":1}\n' > "$out""#,
    );
    let cells = plan_matrix(&s(&["m"]), &s(&["syn"]), &s(&["base"])).unwrap();
    let trainer = Arc::new(CommandTrainer::parse(&cmd, Duration::from_secs(30)).unwrap());
    run_matrix(&cells, &registry(trainer), &ws.layout, &ws.store(), &ws.options(1)).unwrap();
    let store = read_store(&ws.store()).unwrap();
    assert!(store[0].error.as_deref().unwrap().contains("expected m/syn/base"));
}

#[test]
fn xlnet_gets_smaller_batches() {
    let settings = TrainerSettings::default();
    assert_eq!(settings.config_for("xlnet").batch_size, 16);
    assert_eq!(settings.config_for("bert").batch_size, 32);
    assert_eq!(settings.config_for("bert").learning_rate, 3e-5);
}

#[test]
fn plan_count_matches_triple_loop() {
    let models = s(&["a", "b", "c"]);
    let datasets = s(&["x", "y"]);
    let conds = s(&["base", "all", "zh", "es", "vi"]);
    let cells = plan_matrix(&models, &datasets, &conds).unwrap();
    let mut expected = Vec::new();
    for d in &datasets {
        for m in &models {
            for c in &conds {
                expected.push(format!("{m}/{d}/{c}"));
            }
        }
    }
    assert_eq!(
        cells.iter().map(ExperimentCell::to_string).collect::<Vec<_>>(),
        expected
    );
    assert!(plan_matrix(&models, &datasets, &s(&["base", "base"])).is_err());
    assert!(plan_matrix(&models, &[], &conds).is_err());
    assert!(plan_matrix(&models, &datasets, &s(&["Chinese!"])).is_err());
}

fn brute_force_threshold(dev: &[(f64, u8)]) -> (f64, f64) {
    let golds: Vec<u8> = dev.iter().map(|d| d.1).collect();
    let mut best = (f64::NAN, -1.0);
    let mut values: Vec<f64> = dev.iter().map(|d| d.0).collect();
    values.sort_by(f64::total_cmp);
    for t in values {
        let preds: Vec<u8> = dev.iter().map(|d| u8::from(d.0 >= t)).collect();
        let f1 = compute_metrics(&preds, &golds).unwrap().f1;
        if f1 > best.1 || (f1 == best.1 && t < best.0) {
            best = (t, f1);
        }
    }
    best
}

#[test]
fn threshold_on_fifty_pairs_matches_grid_search() {
    let corpus = synthetic_corpus(27, 23, SplitTag::Dev);
    let dev: Vec<(f64, u8)> = corpus
        .records
        .iter()
        .map(|r| (jaccard(&r.sentence, &r.paraphrase), r.quality))
        .collect();
    assert_eq!(dev.len(), 50);
    assert_eq!(choose_threshold(&dev), Some(brute_force_threshold(&dev)));
}

proptest! {
    #[test]
    fn threshold_matches_grid_search(dev in prop::collection::vec((0u8..=10, 0u8..2), 1..60)) {
        let dev: Vec<(f64, u8)> = dev.into_iter().map(|(j, q)| (j as f64 / 10.0, q)).collect();
        prop_assert_eq!(choose_threshold(&dev), Some(brute_force_threshold(&dev)));
    }

    #[test]
    fn jaccard_bounds(a in "[a-c ]{0,12}", b in "[a-c ]{0,12}") {
        let j = jaccard(&a, &b);
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert_eq!(j, jaccard(&b, &a));
        prop_assert_eq!(jaccard(&a, &a.to_uppercase()), 1.0);
    }
}

#[test]
fn jaccard_extremes() {
    assert_eq!(jaccard("the cat", "the cat"), 1.0);
    assert_eq!(jaccard("the cat", "a dog"), 0.0);
    assert_eq!(jaccard("The Cat sat", "the cat"), 2.0 / 3.0);
}

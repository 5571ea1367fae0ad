//! Command-line front end. [`run`] is the whole program minus logger setup,
//! so tests can drive it in-process.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error,
//! 4 trainer error.

mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

pub use config::{BackendKind, ToolConfig, CONFIG_ENV, DEFAULT_CONFIG_FILE};

use crate::augment::{self, AugmentError, DEFAULT_SOURCE_LANG};
use crate::corpus::{self, CorpusError, CorpusFormat, SplitTag};
use crate::fsutil;
use crate::harness::{
    self, CommandTrainer, CorpusLayout, HarnessError, OverlapTrainer, RunOptions, TrainerError, TrainerManifest,
    TrainerRegistry, DEFAULT_TRAINER_TIMEOUT,
};
use crate::langfam::{self, LangFamError};
use crate::metrics::{self, Axis, Metric, MetricsError, ReportFormat};
use crate::rng::DEFAULT_SEED;
use crate::translate::{
    HttpBackend, Lexicon, MockBackend, MockConfig, TranslateError, TranslationBackend, TranslationCache, Translator,
};

/// Model id always served by the built-in overlap trainer unless an adapter
/// is configured for it.
pub const OVERLAP_MODEL: &str = "overlap";

const DEFAULT_CACHE_DIR: &str = ".betkit-cache";
const DEFAULT_STORE: &str = "results.jsonl";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const BACKEND: i32 = 3;
    pub const TRAINER: i32 = 4;

    fn new(code: i32, message: impl fmt::Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }

    fn usage(message: impl fmt::Display) -> Self {
        Self::new(Self::USAGE, message)
    }

    fn data(message: impl fmt::Display) -> Self {
        Self::new(Self::DATA, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::UnknownFormat(_) | CorpusError::InvalidArgument(_) => Self::usage(e),
            _ => Self::data(e),
        }
    }
}

impl From<LangFamError> for CliError {
    fn from(e: LangFamError) -> Self {
        match e {
            LangFamError::InvalidArgument(_) => Self::usage(e),
            _ => Self::data(e),
        }
    }
}

impl From<TranslateError> for CliError {
    fn from(e: TranslateError) -> Self {
        match e {
            TranslateError::Config(_) => Self::usage(e),
            _ => Self::new(Self::BACKEND, e),
        }
    }
}

impl From<AugmentError> for CliError {
    fn from(e: AugmentError) -> Self {
        match e {
            AugmentError::Backend { .. } => Self::new(Self::BACKEND, e),
            AugmentError::NoLanguages | AugmentError::InvalidLanguage(_) => Self::usage(e),
            AugmentError::Corpus(c) => c.into(),
            _ => Self::data(e),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::UnknownMetric(_) | MetricsError::UnknownAxis(_) => Self::usage(e),
            _ => Self::data(e),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidPlan(_) => Self::usage(e),
            _ => Self::data(e),
        }
    }
}

impl From<TrainerError> for CliError {
    fn from(e: TrainerError) -> Self {
        Self::new(Self::TRAINER, e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "betkit",
    version,
    about = "Backtranslation augmentation for paraphrase identification corpora"
)]
struct Cli {
    /// Configuration file (default: $BET_CONFIG, else ./betkit.conf if present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select intermediary languages from a language-family database.
    Langfam(LangfamArgs),
    /// Draw a class-balanced sample and write it as interchange JSON lines.
    Downsample(DownsampleArgs),
    /// Split a corpus into train/dev (and optionally test) interchange files.
    Split(SplitArgs),
    /// Backtranslate a training split through intermediary languages.
    Augment(AugmentArgs),
    /// Run the experiment grid and append results to the store.
    Run(RunArgs),
    /// Write every gain report for a results store into a directory.
    Analyze(AnalyzeArgs),
    /// Print one report for a results store.
    Report(ReportArgs),
    /// Built-in overlap trainer as an adapter command.
    #[command(hide = true)]
    TrainOverlap { manifest: PathBuf },
}

#[derive(Debug, Args)]
struct LangfamArgs {
    /// Language database (TSV); defaults to the bundled one.
    #[arg(long)]
    db: Option<PathBuf>,
    #[arg(short, long, default_value_t = 10)]
    k: usize,
    /// Tab-separated output without alignment.
    #[arg(long)]
    tsv: bool,
}

#[derive(Debug, Args)]
struct DownsampleArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short, default_value = "interchange")]
    format: CorpusFormat,
    /// Records drawn from each class.
    #[arg(short, long, default_value_t = corpus::DEFAULT_PER_CLASS)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short, default_value = "interchange")]
    format: CorpusFormat,
    /// Directory receiving train.jsonl, dev.jsonl and test.jsonl.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = corpus::DEFAULT_DEV_FRACTION)]
    dev_fraction: f64,
    /// Carve a test split out of the input first.
    #[arg(long, conflicts_with = "test_input")]
    test_fraction: Option<f64>,
    /// Use this file as the test split instead.
    #[arg(long)]
    test_input: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    /// Training split to augment.
    #[arg(long)]
    train: PathBuf,
    #[arg(long, short, default_value = "interchange")]
    format: CorpusFormat,
    /// Dataset name used for the output directory (default: the corpus id).
    #[arg(long)]
    dataset: Option<String>,
    /// Intermediary languages (default: the top-k selection).
    #[arg(long, value_delimiter = ',')]
    languages: Vec<String>,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long)]
    db: Option<PathBuf>,
    #[arg(long)]
    source_lang: Option<String>,
    #[command(flatten)]
    backend: BackendArgs,
    /// Output root; corpora go to <out>/<dataset>/.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BackendArgs {
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long)]
    substitution_rate: Option<f64>,
    #[arg(long)]
    mock_seed: Option<u64>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Keep translations in memory only.
    #[arg(long)]
    no_cache: bool,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    max_rps: Option<f64>,
    #[arg(long)]
    max_concurrent: Option<usize>,
    /// Record failed pairs in the manifest and keep going.
    #[arg(long)]
    allow_partial: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    models: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    datasets: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    conditions: Vec<String>,
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    augmented_dir: Option<PathBuf>,
    #[arg(long)]
    work_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Adapter command for a model, as MODEL=COMMAND. Repeatable.
    #[arg(long = "adapter", value_name = "MODEL=COMMAND")]
    adapters: Vec<String>,
    #[arg(long)]
    timeout_secs: Option<u64>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    store: Option<PathBuf>,
    /// Restrict the box-plot summaries to one axis.
    #[arg(long)]
    axis: Option<Axis>,
    /// Restrict the CSV and box-plot output to one metric.
    #[arg(long)]
    metric: Option<Metric>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long, short, default_value = "md")]
    format: ReportFormat,
    #[arg(long)]
    axis: Option<Axis>,
    #[arg(long)]
    metric: Option<Metric>,
    /// Write to a file instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CliError::USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("betkit: error: {e}");
            e.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Command::TrainOverlap { manifest } = &cli.command {
        return train_overlap(manifest);
    }
    let cfg = match &cli.config {
        Some(path) => ToolConfig::load_file(path),
        None => ToolConfig::load(),
    }
    .map_err(|e| CliError::usage(format!("config: {e}")))?;
    match cli.command {
        Command::Langfam(a) => cmd_langfam(&a),
        Command::Downsample(a) => cmd_downsample(&a, &cfg),
        Command::Split(a) => cmd_split(&a, &cfg),
        Command::Augment(a) => cmd_augment(&a, &cfg),
        Command::Run(a) => cmd_run(&a, &cfg),
        Command::Analyze(a) => cmd_analyze(&a, &cfg),
        Command::Report(a) => cmd_report(&a, &cfg),
        Command::TrainOverlap { .. } => unreachable!("handled above"),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    fsutil::write_atomic(path, text.as_bytes()).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn selected_languages(db: Option<&Path>, k: usize) -> Result<Vec<langfam::Language>, CliError> {
    let raw = match db {
        Some(p) => read_text(p)?,
        None => langfam::BUNDLED_DB.to_string(),
    };
    Ok(langfam::select_intermediaries(&raw, k)?)
}

fn cmd_langfam(a: &LangfamArgs) -> Result<(), CliError> {
    let langs = selected_languages(a.db.as_deref(), a.k)?;
    let rows: Vec<[String; 5]> = langs
        .iter()
        .enumerate()
        .map(|(i, l)| {
            [
                (i + 1).to_string(),
                l.code.clone(),
                l.name.clone(),
                l.top_family().to_string(),
                l.l1_speakers_millions.to_string(),
            ]
        })
        .collect();
    let header = ["rank", "code", "language", "family", "l1_speakers_millions"].map(String::from);
    let mut out = String::new();
    if a.tsv {
        for row in std::iter::once(&header).chain(&rows) {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
    } else {
        let mut widths = header.clone().map(|h| h.chars().count());
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        for row in std::iter::once(&header).chain(&rows) {
            let line: Vec<String> = row.iter().zip(widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
    }
    print!("{out}");
    Ok(())
}

fn cmd_downsample(a: &DownsampleArgs, cfg: &ToolConfig) -> Result<(), CliError> {
    let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let input = corpus::load_corpus(&a.input, a.format)?;
    let sample = corpus::downsample_balanced(&input, a.n, seed)?;
    corpus::write_corpus(&sample, &a.out)?;
    eprintln!("wrote {} records to {}", sample.len(), a.out.display());
    Ok(())
}

fn cmd_split(a: &SplitArgs, cfg: &ToolConfig) -> Result<(), CliError> {
    let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let input = corpus::load_corpus(&a.input, a.format)?;
    let (rest, test) = match (a.test_fraction, &a.test_input) {
        (Some(f), _) => {
            let (rest, test) = corpus::split_test(&input, f, seed)?;
            (rest, Some(test))
        }
        (None, Some(path)) => {
            let test = corpus::load_corpus(path, a.format)?.with_split(SplitTag::Test);
            (input, Some(test))
        }
        (None, None) => (input, None),
    };
    let (train, dev) = corpus::split_train_dev(&rest, a.dev_fraction, seed)?;
    corpus::write_corpus(&train, &a.out_dir.join("train.jsonl"))?;
    corpus::write_corpus(&dev, &a.out_dir.join("dev.jsonl"))?;
    if let Some(test) = &test {
        corpus::write_corpus(test, &a.out_dir.join("test.jsonl"))?;
    }
    eprintln!(
        "train {} / dev {} / test {} records in {}",
        train.len(),
        dev.len(),
        test.as_ref().map_or(0, |t| t.len()),
        a.out_dir.display()
    );
    Ok(())
}

fn build_translator(a: &BackendArgs, cfg: &ToolConfig) -> Result<Translator, CliError> {
    let mut policy = cfg.policy.clone().unwrap_or_default();
    if let Some(v) = a.max_retries {
        policy.max_retries = v;
    }
    if let Some(v) = a.max_rps {
        policy.max_requests_per_second = v;
    }
    if let Some(v) = a.max_concurrent {
        policy.max_concurrent_requests = v;
    }
    policy.allow_partial |= a.allow_partial;
    policy.validate()?;

    let backend: Arc<dyn TranslationBackend> = match a.backend.or(cfg.backend).unwrap_or(BackendKind::Mock) {
        BackendKind::Mock => {
            let rate = a.substitution_rate.or(cfg.mock.substitution_rate).unwrap_or(0.0);
            if !(0.0..=1.0).contains(&rate) {
                return Err(CliError::usage("substitution rate must be in [0, 1]"));
            }
            let lexicon = match a.lexicon.as_ref().or(cfg.mock.lexicon.as_ref()) {
                Some(p) => {
                    Lexicon::parse(&read_text(p)?).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?
                }
                None => Lexicon::bundled(),
            };
            let seed = a.mock_seed.or(cfg.mock.seed).unwrap_or(DEFAULT_SEED);
            Arc::new(MockBackend::new(
                MockConfig {
                    substitution_rate: rate,
                    seed,
                },
                lexicon,
            ))
        }
        BackendKind::Http => {
            let base = a
                .base_url
                .as_ref()
                .or(cfg.http.base_url.as_ref())
                .ok_or_else(|| CliError::usage("the http backend needs --base-url or [http] base_url"))?;
            let version = cfg.http.version.as_deref().unwrap_or("v1");
            Arc::new(HttpBackend::from_env(
                base,
                version,
                Duration::from_millis(policy.request_timeout_ms),
            ))
        }
    };
    let cache = if a.no_cache {
        TranslationCache::in_memory()
    } else {
        let dir = a
            .cache_dir
            .clone()
            .or_else(|| cfg.cache_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
        TranslationCache::open(&dir, &backend.id())
            .map_err(|e| CliError::data(format!("translation cache {}: {e}", dir.display())))?
    };
    Ok(Translator::new(backend, Arc::new(cache), policy)?)
}

fn cmd_augment(a: &AugmentArgs, cfg: &ToolConfig) -> Result<(), CliError> {
    let languages: Vec<String> = if a.languages.is_empty() {
        selected_languages(a.db.as_deref(), a.top_k)?
            .into_iter()
            .map(|l| l.code)
            .collect()
    } else {
        a.languages.clone()
    };
    let source_lang = a
        .source_lang
        .as_deref()
        .or(cfg.source_lang.as_deref())
        .unwrap_or(DEFAULT_SOURCE_LANG);
    let train = corpus::load_corpus(&a.train, a.format)?.with_split(SplitTag::Train);
    let dataset = a.dataset.clone().unwrap_or_else(|| train.dataset_id.clone());
    let out = a
        .out
        .clone()
        .or_else(|| cfg.augmented_dir.clone())
        .unwrap_or_else(|| PathBuf::from("augmented"));
    let translator = build_translator(&a.backend, cfg)?;
    let output = augment::augment_corpus(&train, &languages, &translator, source_lang)?;
    augment::write_augmentation(&out, &dataset, &output)?;
    for (code, counts) in &output.manifest.counts {
        eprintln!(
            "{code}: generated {} filtered {} kept {} failed {}",
            counts.generated, counts.filtered_exact, counts.kept, counts.failed
        );
    }
    let stats = translator.stats();
    eprintln!(
        "{} records in {}; backend calls {}, cache hits {}",
        output.combined_all.len(),
        augment::dataset_dir(&out, &dataset).display(),
        stats.backend_invocations,
        stats.cache_hits
    );
    Ok(())
}

fn cmd_run(a: &RunArgs, cfg: &ToolConfig) -> Result<(), CliError> {
    let cells = harness::plan_matrix(&a.models, &a.datasets, &a.conditions)?;
    let timeout = a
        .timeout_secs
        .or(cfg.trainer_timeout_secs)
        .map_or(DEFAULT_TRAINER_TIMEOUT, Duration::from_secs);

    let mut commands = cfg.adapters.clone();
    for spec in &a.adapters {
        let (model, command) = spec
            .split_once('=')
            .filter(|(m, c)| !m.is_empty() && !c.trim().is_empty())
            .ok_or_else(|| CliError::usage(format!("--adapter expects MODEL=COMMAND, got `{spec}`")))?;
        commands.insert(model.to_string(), command.to_string());
    }
    let mut registry = TrainerRegistry::new();
    registry.register(OVERLAP_MODEL, Arc::new(OverlapTrainer));
    for (model, command) in &commands {
        registry.register(model.clone(), Arc::new(CommandTrainer::parse(command, timeout)?));
    }
    for model in &a.models {
        if registry.resolve(model).is_none() {
            return Err(CliError::usage(format!(
                "no trainer adapter for model `{model}` (use --adapter {model}=COMMAND or [adapters] in the config)"
            )));
        }
    }

    let layout = CorpusLayout {
        data_dir: a
            .data_dir
            .clone()
            .or_else(|| cfg.data_dir.clone())
            .unwrap_or_else(|| "data".into()),
        augmented_dir: a
            .augmented_dir
            .clone()
            .or_else(|| cfg.augmented_dir.clone())
            .unwrap_or_else(|| "augmented".into()),
    };
    let options = RunOptions {
        work_dir: a
            .work_dir
            .clone()
            .or_else(|| cfg.work_dir.clone())
            .unwrap_or_else(|| "work".into()),
        workers: a.workers.or(cfg.workers).unwrap_or(1),
        settings: cfg.trainer_settings().map_err(CliError::usage)?,
    };
    let store = store_path(a.store.as_ref(), cfg);
    let summary = harness::run_matrix(&cells, &registry, &layout, &store, &options)?;
    eprintln!(
        "{} cells planned: {} already done, {} succeeded, {} failed ({})",
        summary.planned,
        summary.skipped,
        summary.succeeded,
        summary.failed,
        store.display()
    );
    if summary.failed > 0 {
        return Err(CliError::new(
            CliError::TRAINER,
            format!(
                "{} cell(s) failed; see the error field in {}",
                summary.failed,
                store.display()
            ),
        ));
    }
    Ok(())
}

fn store_path(flag: Option<&PathBuf>, cfg: &ToolConfig) -> PathBuf {
    flag.cloned()
        .or_else(|| cfg.store.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE))
}

fn load_results(path: &Path) -> Result<Vec<metrics::ResultRecord>, CliError> {
    if !path.exists() {
        return Err(CliError::data(format!("{}: results store not found", path.display())));
    }
    Ok(metrics::read_store(path)?)
}

fn cmd_analyze(a: &AnalyzeArgs, cfg: &ToolConfig) -> Result<(), CliError> {
    let results = load_results(&store_path(a.store.as_ref(), cfg))?;
    let table = metrics::compute_gains(&results)?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    if table.gains.is_empty() {
        eprintln!("warning: no augmented results with a matching base; the gain report is empty");
    }
    for format in [ReportFormat::Csv, ReportFormat::Markdown, ReportFormat::BoxplotJson] {
        let text = metrics::emit_report(&results, format, a.axis, a.metric)?;
        let path = a.out.join(format!("gains.{}", format.extension()));
        write_output(&path, &text)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs, cfg: &ToolConfig) -> Result<(), CliError> {
    let results = load_results(&store_path(a.store.as_ref(), cfg))?;
    let text = metrics::emit_report(&results, a.format, a.axis, a.metric)?;
    match &a.out {
        Some(path) => write_output(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn train_overlap(manifest_path: &Path) -> Result<(), CliError> {
    let manifest = TrainerManifest::read(manifest_path)?;
    let m = OverlapTrainer::run_manifest(&manifest)?;
    eprintln!(
        "{}: accuracy {:.4} f1 {:.4}",
        manifest.output.display(),
        m.accuracy,
        m.f1
    );
    Ok(())
}

//! Backtranslation augmentation of the paraphrase side of a training split.
//!
//! Every paraphrase is translated into each intermediary language and back.
//! Candidates that normalize equal to the original paraphrase are dropped;
//! the rest become new records that keep the source sentence and label.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{self, Corpus, CorpusError, Origin, PairRecord, SplitTag};
use crate::fsutil;
use crate::translate::{TranslateError, TranslationRequest, Translator};

pub const DEFAULT_SOURCE_LANG: &str = "en";
/// Condition name for the union of all intermediary languages.
pub const ALL: &str = "all";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("only the train split can be augmented, got {0:?}")]
    NotTrainSplit(SplitTag),
    #[error("no intermediary languages given")]
    NoLanguages,
    #[error("invalid intermediary language `{0}`")]
    InvalidLanguage(String),
    #[error("pair `{id}` via `{pivot}`: {source}")]
    Backend {
        id: String,
        pivot: String,
        #[source]
        source: TranslateError,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Drop,
}

/// NFC, trimmed, with internal whitespace runs collapsed to one space.
pub fn normalize_for_match(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn filter_exact_match(original: &str, candidate: &str) -> FilterDecision {
    if normalize_for_match(original) == normalize_for_match(candidate) {
        FilterDecision::Drop
    } else {
        FilterDecision::Keep
    }
}

/// Round-trips `pair.paraphrase` through `pivot`. The sentence is never sent.
pub fn backtranslate_pair(
    pair: &PairRecord,
    pivot: &str,
    translator: &Translator,
    source_lang: &str,
) -> Result<String, AugmentError> {
    let annotate = |source| AugmentError::Backend {
        id: pair.id.clone(),
        pivot: pivot.to_string(),
        source,
    };
    if pivot == source_lang {
        return Err(AugmentError::InvalidLanguage(pivot.to_string()));
    }
    let forward = translator
        .translate(&TranslationRequest::new(pair.paraphrase.as_str(), source_lang, pivot))
        .map_err(annotate)?;
    translator
        .translate(&TranslationRequest::new(forward, pivot, source_lang))
        .map_err(annotate)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageCounts {
    /// Successful round trips.
    pub generated: usize,
    pub filtered_exact: usize,
    pub kept: usize,
    /// Pairs skipped because the backend failed.
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFailure {
    pub id: String,
    pub pivot: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationManifest {
    pub source_dataset_id: String,
    pub source_lang: String,
    pub source_records: usize,
    pub languages: Vec<String>,
    pub counts: BTreeMap<String, LanguageCounts>,
    pub backend_id: String,
    pub created_at: String,
    #[serde(default)]
    pub failures: Vec<PairFailure>,
}

#[derive(Debug, Clone)]
pub struct AugmentOutput {
    /// Augmented-only corpora, in the requested language order.
    pub per_language: Vec<(String, Corpus)>,
    /// Original records followed by every kept augmented record.
    pub combined_all: Corpus,
    pub manifest: AugmentationManifest,
}

pub fn augmented_id(source_id: &str, code: &str) -> String {
    format!("{source_id}#{code}")
}

fn validate_languages(languages: &[String], source_lang: &str) -> Result<(), AugmentError> {
    if languages.is_empty() {
        return Err(AugmentError::NoLanguages);
    }
    let mut seen = HashSet::new();
    for code in languages {
        if !corpus::is_valid_code(code) || code == ALL || code == source_lang || !seen.insert(code) {
            return Err(AugmentError::InvalidLanguage(code.clone()));
        }
    }
    Ok(())
}

/// Augments a training corpus through every language in `languages`.
///
/// With `allow_partial` set on the translator's policy, pairs whose round
/// trip fails are listed in the manifest and skipped; otherwise the first
/// failure (in language order, then source order) aborts the run.
pub fn augment_corpus(
    train: &Corpus,
    languages: &[String],
    translator: &Translator,
    source_lang: &str,
) -> Result<AugmentOutput, AugmentError> {
    if train.split != SplitTag::Train {
        return Err(AugmentError::NotTrainSplit(train.split));
    }
    validate_languages(languages, source_lang)?;
    let allow_partial = translator.policy().allow_partial;

    let forward: Vec<TranslationRequest> = languages
        .iter()
        .flat_map(|code| {
            train
                .records
                .iter()
                .map(move |r| TranslationRequest::new(r.paraphrase.as_str(), source_lang, code.as_str()))
        })
        .collect();
    let forward_out = translator.translate_batch(&forward);

    let mut backward = Vec::new();
    let mut backward_slot = vec![None; forward.len()];
    for (i, (req, out)) in forward.iter().zip(&forward_out).enumerate() {
        if let Ok(text) = out {
            backward_slot[i] = Some(backward.len());
            backward.push(TranslationRequest::new(
                text.as_str(),
                req.target_lang.as_str(),
                source_lang,
            ));
        }
    }
    let backward_out = translator.translate_batch(&backward);

    let n = train.records.len();
    let mut per_language = Vec::with_capacity(languages.len());
    let mut counts = BTreeMap::new();
    let mut failures = Vec::new();
    for (li, code) in languages.iter().enumerate() {
        let mut tally = LanguageCounts::default();
        let mut records = Vec::new();
        for (ri, source) in train.records.iter().enumerate() {
            let idx = li * n + ri;
            let outcome = match (&forward_out[idx], backward_slot[idx]) {
                (Err(e), _) => Err(e.clone()),
                (Ok(_), Some(b)) => backward_out[b].clone(),
                (Ok(_), None) => unreachable!("successful forward always has a backward slot"),
            };
            let candidate = match outcome {
                Ok(c) => c,
                Err(source_err) => {
                    if !allow_partial {
                        return Err(AugmentError::Backend {
                            id: source.id.clone(),
                            pivot: code.clone(),
                            source: source_err,
                        });
                    }
                    tally.failed += 1;
                    failures.push(PairFailure {
                        id: source.id.clone(),
                        pivot: code.clone(),
                        error: source_err.to_string(),
                    });
                    continue;
                }
            };
            tally.generated += 1;
            match filter_exact_match(&source.paraphrase, &candidate) {
                FilterDecision::Drop => tally.filtered_exact += 1,
                FilterDecision::Keep => {
                    tally.kept += 1;
                    records.push(PairRecord {
                        id: augmented_id(&source.id, code),
                        sentence: source.sentence.clone(),
                        paraphrase: candidate,
                        quality: source.quality,
                        origin: Origin::Augmented(code.clone()),
                    });
                }
            }
        }
        counts.insert(code.clone(), tally);
        per_language.push((
            code.clone(),
            Corpus::new(train.dataset_id.clone(), SplitTag::Train, records),
        ));
    }

    let mut all_records = train.records.clone();
    for (_, c) in &per_language {
        all_records.extend(c.records.iter().cloned());
    }
    let combined_all = Corpus::new(train.dataset_id.clone(), SplitTag::Train, all_records);

    Ok(AugmentOutput {
        per_language,
        combined_all,
        manifest: AugmentationManifest {
            source_dataset_id: train.dataset_id.clone(),
            source_lang: source_lang.to_string(),
            source_records: n,
            languages: languages.to_vec(),
            counts,
            backend_id: translator.backend_id().to_string(),
            created_at: chrono::Utc::now().to_rfc3339(),
            failures,
        },
    })
}

/// Directory holding the augmented corpora of `dataset` under `out_dir`.
pub fn dataset_dir(out_dir: &Path, dataset: &str) -> PathBuf {
    out_dir.join(dataset)
}

/// Writes `<out>/<dataset>/<code>.jsonl`, `all.jsonl` and `manifest.json`.
pub fn write_augmentation(out_dir: &Path, dataset: &str, output: &AugmentOutput) -> Result<(), AugmentError> {
    let dir = dataset_dir(out_dir, dataset);
    for (code, c) in &output.per_language {
        corpus::write_corpus(c, &dir.join(format!("{code}.jsonl")))?;
    }
    corpus::write_corpus(&output.combined_all, &dir.join(format!("{ALL}.jsonl")))?;
    let path = dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(&output.manifest).expect("manifest serializes");
    json.push('\n');
    fsutil::write_atomic(&path, json.as_bytes()).map_err(|source| AugmentError::Io { path, source })
}

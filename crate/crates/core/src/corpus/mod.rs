//! Paraphrase-pair corpora: records, file formats, sampling and splits.

mod formats;
mod sampling;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use formats::{load_corpus, parse_corpus, to_interchange, write_corpus};
pub use sampling::{downsample_balanced, split_test, split_train_dev, stratified_split};

/// Default number of records drawn per class when downsampling.
pub const DEFAULT_PER_CLASS: usize = 50;
pub const DEFAULT_DEV_FRACTION: f64 = 0.2;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown corpus format `{0}` (expected mrpc, tpc, quora or interchange)")]
    UnknownFormat(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: label `{value}` is not 0 or 1")]
    InvalidLabel { line: usize, value: String },
    #[error("line {line}: {reason}")]
    Validation { line: usize, reason: String },
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("not enough {class} records: need {needed}, have {available}")]
    Shortage {
        class: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("cannot split a corpus of {0} records (need at least 2)")]
    CannotSplit(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Name of a label class as used in error messages.
pub fn class_name(quality: u8) -> &'static str {
    if quality == 1 {
        "paraphrase (quality 1)"
    } else {
        "non-paraphrase (quality 0)"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Origin {
    Original,
    /// Produced by backtranslation through the given language code, or the
    /// literal `all`.
    Augmented(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Original => f.write_str("original"),
            Origin::Augmented(code) => write!(f, "aug:{code}"),
        }
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "original" {
            return Ok(Origin::Original);
        }
        match s.strip_prefix("aug:") {
            Some(code) if is_valid_code(code) => Ok(Origin::Augmented(code.to_string())),
            Some(code) => Err(format!("invalid intermediary code `{code}`")),
            None => Err(format!("unknown origin `{s}`")),
        }
    }
}

impl Serialize for Origin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Origin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Syntactic check for language codes: ASCII alphanumerics and `-`,
/// starting with a letter.
pub fn is_valid_code(code: &str) -> bool {
    code.starts_with(|c: char| c.is_ascii_alphabetic()) && code.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub sentence: String,
    pub paraphrase: String,
    pub quality: u8,
    pub origin: Origin,
}

impl PairRecord {
    pub fn original(
        id: impl Into<String>,
        sentence: impl Into<String>,
        paraphrase: impl Into<String>,
        quality: u8,
    ) -> Self {
        Self {
            id: id.into(),
            sentence: sentence.into(),
            paraphrase: paraphrase.into(),
            quality,
            origin: Origin::Original,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty record id".into());
        }
        if self.quality > 1 {
            return Err(format!("record `{}`: quality {} is not 0 or 1", self.id, self.quality));
        }
        if self.sentence.trim().is_empty() {
            return Err(format!("record `{}`: empty sentence", self.id));
        }
        if self.paraphrase.trim().is_empty() {
            return Err(format!("record `{}`: empty paraphrase", self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Dev,
    Test,
    Unsplit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub dataset_id: String,
    pub split: SplitTag,
    pub records: Vec<PairRecord>,
}

impl Corpus {
    pub fn new(dataset_id: impl Into<String>, split: SplitTag, records: Vec<PairRecord>) -> Self {
        Self {
            dataset_id: dataset_id.into(),
            split,
            records,
        }
    }

    pub fn with_split(mut self, split: SplitTag) -> Self {
        self.split = split;
        self
    }

    pub fn with_dataset_id(mut self, id: impl Into<String>) -> Self {
        self.dataset_id = id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of records with the given label.
    pub fn count_label(&self, quality: u8) -> usize {
        self.records.iter().filter(|r| r.quality == quality).count()
    }

    /// Checks every record invariant and id uniqueness.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut ids = std::collections::HashSet::with_capacity(self.records.len());
        for (i, r) in self.records.iter().enumerate() {
            r.validate()
                .map_err(|reason| CorpusError::Validation { line: i + 1, reason })?;
            if !ids.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Mrpc,
    Tpc,
    Quora,
    Interchange,
}

impl CorpusFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusFormat::Mrpc => "mrpc",
            CorpusFormat::Tpc => "tpc",
            CorpusFormat::Quora => "quora",
            CorpusFormat::Interchange => "interchange",
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mrpc" => Ok(CorpusFormat::Mrpc),
            "tpc" => Ok(CorpusFormat::Tpc),
            "quora" => Ok(CorpusFormat::Quora),
            "interchange" | "jsonl" => Ok(CorpusFormat::Interchange),
            _ => Err(CorpusError::UnknownFormat(s.to_string())),
        }
    }
}

//! Tool configuration file.
//!
//! TOML key-value file read from `$BET_CONFIG`, else `./betkit.conf` when it
//! exists. Every key is optional. Command-line flags take precedence.
//!
//! ```toml
//! data_dir = "data"            # split corpora: <data_dir>/<dataset>/{train,dev,test}.jsonl
//! augmented_dir = "augmented"  # augmented corpora: <augmented_dir>/<dataset>/<code>.jsonl
//! work_dir = "work"            # per-cell manifests and trainer output
//! cache_dir = ".betkit-cache"  # translation cache
//! store = "results.jsonl"
//! seed = 42
//! workers = 1
//! trainer_timeout_secs = 86400
//! backend = "mock"             # mock | http
//! source_lang = "en"
//!
//! [mock]
//! substitution_rate = 0.3
//! seed = 42
//! lexicon = "synonyms.tsv"     # optional, defaults to the bundled lexicon
//!
//! [http]
//! base_url = "http://localhost:5000"
//! version = "v1"
//!
//! [policy]                     # translation client
//! max_concurrent_requests = 4
//! max_requests_per_second = 5.0
//! max_retries = 3
//! initial_backoff_ms = 500
//! backoff_multiplier = 2.0
//! request_timeout_ms = 30000
//! allow_partial = false
//!
//! [trainer]                    # defaults handed to every adapter
//! epochs = 3
//! batch_size = 32
//!
//! [trainer.overrides.xlnet]
//! batch_size = 16
//!
//! [adapters]                   # model id -> adapter command
//! bert = "python3 hf_trainer.py --model bert"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::harness::{ConfigOverride, TrainerConfig, TrainerSettings};
use crate::translate::BackendPolicy;

pub const CONFIG_ENV: &str = "BET_CONFIG";
pub const DEFAULT_CONFIG_FILE: &str = "betkit.conf";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockSection {
    pub substitution_rate: Option<f64>,
    pub seed: Option<u64>,
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpSection {
    pub base_url: Option<String>,
    pub version: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerSection {
    pub epochs: Option<u32>,
    pub batch_size: Option<u32>,
    pub learning_rate: Option<f64>,
    pub max_sequence_length: Option<u32>,
    pub seed: Option<u64>,
    pub overrides: BTreeMap<String, ConfigOverride>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub data_dir: Option<PathBuf>,
    pub augmented_dir: Option<PathBuf>,
    pub work_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub trainer_timeout_secs: Option<u64>,
    pub backend: Option<BackendKind>,
    pub source_lang: Option<String>,
    pub mock: MockSection,
    pub http: HttpSection,
    pub policy: Option<BackendPolicy>,
    pub trainer: TrainerSection,
    pub adapters: BTreeMap<String, String>,
}

impl ToolConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Loads `$BET_CONFIG` if set (it must exist), else `./betkit.conf` if
    /// present, else the empty configuration. Relative paths inside the
    /// file stay relative to the working directory.
    pub fn load() -> Result<Self, String> {
        match std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()) {
            Some(p) => Self::load_file(Path::new(&p)),
            None if Path::new(DEFAULT_CONFIG_FILE).exists() => Self::load_file(Path::new(DEFAULT_CONFIG_FILE)),
            None => Ok(Self::default()),
        }
    }

    pub fn load_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn trainer_settings(&self) -> Result<TrainerSettings, String> {
        let mut settings = TrainerSettings::default();
        let t = &self.trainer;
        let d = TrainerConfig::default();
        settings.defaults = TrainerConfig {
            epochs: t.epochs.unwrap_or(d.epochs),
            batch_size: t.batch_size.unwrap_or(d.batch_size),
            learning_rate: t.learning_rate.unwrap_or(d.learning_rate),
            max_sequence_length: t.max_sequence_length.unwrap_or(d.max_sequence_length),
            seed: t.seed.unwrap_or(d.seed),
        };
        for (model, o) in &t.overrides {
            settings.overrides.insert(model.clone(), *o);
        }
        settings.defaults.validate()?;
        for model in settings.overrides.keys() {
            settings
                .config_for(model)
                .validate()
                .map_err(|e| format!("trainer override for `{model}`: {e}"))?;
        }
        Ok(settings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let doc: String = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let cfg = ToolConfig::parse(&doc).unwrap();
        assert_eq!(cfg.backend, Some(BackendKind::Mock));
        assert_eq!(cfg.policy.as_ref().unwrap().max_retries, 3);
        assert_eq!(cfg.adapters["bert"], "python3 hf_trainer.py --model bert");
        let s = cfg.trainer_settings().unwrap();
        assert_eq!(s.config_for("xlnet").batch_size, 16);
        assert_eq!(s.config_for("bert").batch_size, 32);
    }

    #[test]
    fn empty_and_invalid() {
        let cfg = ToolConfig::parse("").unwrap();
        assert!(cfg.backend.is_none());
        assert_eq!(cfg.trainer_settings().unwrap(), TrainerSettings::default());
        assert!(ToolConfig::parse("bogus = 1").is_err());
        assert!(ToolConfig::parse("backend = \"carrier-pigeon\"").is_err());
        let bad = ToolConfig::parse("[trainer]\nepochs = 0").unwrap();
        assert!(bad.trainer_settings().is_err());
    }
}

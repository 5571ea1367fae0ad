//! Translation backends and the client that drives them.
//!
//! [`Translator`] wraps any [`TranslationBackend`] with a persistent
//! [`TranslationCache`], per-request retry with exponential backoff, and a
//! global request-rate limit. [`MockBackend`] is a deterministic offline
//! stand-in; [`HttpBackend`] talks to a JSON translation service.

mod backend;
mod cache;
mod client;
mod mock;
mod remote;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{BackendError, TranslationBackend};
pub use cache::{cache_key, text_digest, CacheEntry, TranslationCache};
pub use client::{TranslationStats, Translator};
pub use mock::{mock_translate, Lexicon, MockBackend, MockConfig, BUNDLED_LEXICON};
pub use remote::{HttpBackend, API_KEY_ENV};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TranslationRequest {
    pub text: String,
    pub source_lang: String,
    pub target_lang: String,
}

impl TranslationRequest {
    pub fn new(text: impl Into<String>, source_lang: impl Into<String>, target_lang: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
        }
    }

    pub fn validate(&self) -> Result<(), TranslateError> {
        if self.text.is_empty() {
            return Err(TranslateError::InvalidRequest("empty text".into()));
        }
        if self.source_lang.is_empty() || self.target_lang.is_empty() {
            return Err(TranslateError::InvalidRequest("empty language code".into()));
        }
        if self.source_lang == self.target_lang {
            return Err(TranslateError::InvalidRequest(format!(
                "source and target language are both `{}`",
                self.source_lang
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranslateError {
    #[error("invalid translation request: {0}")]
    InvalidRequest(String),
    #[error("backend does not support {source_lang} -> {target_lang}")]
    Capability { source_lang: String, target_lang: String },
    #[error("backend failed after {attempts} attempt(s): {message}")]
    Backend { attempts: u32, message: String },
    #[error("translation cache: {0}")]
    Cache(String),
    #[error("invalid backend policy: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendPolicy {
    pub max_concurrent_requests: usize,
    pub max_requests_per_second: f64,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub backoff_multiplier: f64,
    pub request_timeout_ms: u64,
    /// When set, augmentation records per-pair backend failures and keeps
    /// going instead of aborting.
    pub allow_partial: bool,
}

impl Default for BackendPolicy {
    fn default() -> Self {
        Self {
            max_concurrent_requests: 4,
            max_requests_per_second: 5.0,
            max_retries: 3,
            initial_backoff_ms: 500,
            backoff_multiplier: 2.0,
            request_timeout_ms: 30_000,
            allow_partial: false,
        }
    }
}

impl BackendPolicy {
    pub fn validate(&self) -> Result<(), TranslateError> {
        if self.max_concurrent_requests == 0 {
            return Err(TranslateError::Config(
                "max_concurrent_requests must be positive".into(),
            ));
        }
        if !(self.max_requests_per_second.is_finite() && self.max_requests_per_second > 0.0) {
            return Err(TranslateError::Config(
                "max_requests_per_second must be positive".into(),
            ));
        }
        if !(self.backoff_multiplier.is_finite() && self.backoff_multiplier > 0.0) {
            return Err(TranslateError::Config("backoff_multiplier must be positive".into()));
        }
        if self.request_timeout_ms == 0 {
            return Err(TranslateError::Config("request_timeout_ms must be positive".into()));
        }
        Ok(())
    }

    /// Delay before retry number `retry` (0-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let ms = self.initial_backoff_ms as f64 * self.backoff_multiplier.powi(retry as i32);
        Duration::from_secs_f64((ms / 1000.0).min(3600.0))
    }

    pub fn request_interval(&self) -> Duration {
        Duration::from_secs_f64(1.0 / self.max_requests_per_second)
    }
}

use thiserror::Error;

use super::TranslationRequest;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    /// Network or server-side failure worth retrying.
    #[error("transport: {0}")]
    Transport(String),
    #[error("unsupported language pair {source_lang} -> {target_lang}")]
    Unsupported { source_lang: String, target_lang: String },
    /// The service answered but the answer is unusable.
    #[error("rejected: {0}")]
    Rejected(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Transport(_))
    }
}

/// A machine translation service.
pub trait TranslationBackend: Send + Sync {
    /// Stable identity, including a version tag. Cache entries are keyed on
    /// it, so bumping the version invalidates earlier translations.
    fn id(&self) -> String;

    fn supports(&self, _source_lang: &str, _target_lang: &str) -> bool {
        true
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, BackendError>;
}

//! HTTP translation adapter.
//!
//! `POST <base_url>/translate` with body `{"q", "source", "target"}` and a
//! `{"translatedText"}` response. The credential, when set, travels as an
//! `Authorization: Bearer` header.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendError, TranslationBackend, TranslationRequest};

pub const API_KEY_ENV: &str = "BET_TRANSLATE_API_KEY";

#[derive(Serialize)]
struct RequestBody<'a> {
    q: &'a str,
    source: &'a str,
    target: &'a str,
}

#[derive(Deserialize)]
struct ResponseBody {
    #[serde(rename = "translatedText")]
    translated_text: String,
}

pub struct HttpBackend {
    endpoint: String,
    version: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(base_url: &str, version: &str, api_key: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: format!("{}/translate", base_url.trim_end_matches('/')),
            version: version.to_string(),
            api_key,
            agent,
        }
    }

    /// Reads the credential from `BET_TRANSLATE_API_KEY`.
    pub fn from_env(base_url: &str, version: &str, timeout: Duration) -> Self {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::new(base_url, version, key, timeout)
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl TranslationBackend for HttpBackend {
    fn id(&self) -> String {
        format!("http-{}@{}", self.version, self.endpoint)
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, BackendError> {
        let mut call = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(RequestBody {
                q: &request.text,
                source: &request.source_lang,
                target: &request.target_lang,
            })
            .map_err(|e| BackendError::Transport(e.to_string()))?;

        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(BackendError::Transport(format!("HTTP {status}")));
        }
        if status >= 400 {
            let detail = response.body_mut().read_to_string().unwrap_or_default();
            return Err(BackendError::Rejected(format!("HTTP {status}: {}", detail.trim())));
        }
        let body: ResponseBody = response
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Rejected(format!("unreadable response: {e}")))?;
        Ok(body.translated_text.trim().to_string())
    }
}

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use super::cache::{cache_key, TranslationCache};
use super::{BackendPolicy, TranslateError, TranslationBackend, TranslationRequest};

/// Spaces backend calls at least `interval` apart. The first call goes out
/// immediately.
struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    fn new(interval: Duration) -> Self {
        Self {
            interval,
            next_slot: Mutex::new(None),
        }
    }

    fn acquire(&self) {
        let slot = {
            let mut next = self.next_slot.lock().expect("rate limiter lock");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot
        };
        let now = Instant::now();
        if slot > now {
            std::thread::sleep(slot - now);
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TranslationStats {
    pub backend_invocations: u64,
    pub cache_hits: u64,
}

/// Cache-, retry- and rate-limit-aware front end to a backend.
pub struct Translator {
    backend: Arc<dyn TranslationBackend>,
    backend_id: String,
    cache: Arc<TranslationCache>,
    policy: BackendPolicy,
    limiter: RateLimiter,
    in_flight: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    invocations: AtomicU64,
    cache_hits: AtomicU64,
}

impl Translator {
    pub fn new(
        backend: Arc<dyn TranslationBackend>,
        cache: Arc<TranslationCache>,
        policy: BackendPolicy,
    ) -> Result<Self, TranslateError> {
        policy.validate()?;
        Ok(Self {
            backend_id: backend.id(),
            backend,
            cache,
            limiter: RateLimiter::new(policy.request_interval()),
            policy,
            in_flight: Mutex::new(HashMap::new()),
            invocations: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        })
    }

    /// Translator with a private in-memory cache.
    pub fn uncached(backend: Arc<dyn TranslationBackend>, policy: BackendPolicy) -> Result<Self, TranslateError> {
        Self::new(backend, Arc::new(TranslationCache::in_memory()), policy)
    }

    pub fn backend_id(&self) -> &str {
        &self.backend_id
    }

    pub fn policy(&self) -> &BackendPolicy {
        &self.policy
    }

    pub fn stats(&self) -> TranslationStats {
        TranslationStats {
            backend_invocations: self.invocations.load(Ordering::SeqCst),
            cache_hits: self.cache_hits.load(Ordering::SeqCst),
        }
    }

    fn key_for(&self, request: &TranslationRequest) -> String {
        cache_key(
            &self.backend_id,
            &request.source_lang,
            &request.target_lang,
            &request.text,
        )
    }

    pub fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        request.validate()?;
        if !self.backend.supports(&request.source_lang, &request.target_lang) {
            return Err(TranslateError::Capability {
                source_lang: request.source_lang.clone(),
                target_lang: request.target_lang.clone(),
            });
        }
        let key = self.key_for(request);
        if let Some(hit) = self.cache.get(&key) {
            self.cache_hits.fetch_add(1, Ordering::SeqCst);
            return Ok(hit);
        }

        // One backend call per key, even under concurrent callers.
        let guard = {
            let mut map = self.in_flight.lock().expect("in-flight lock");
            Arc::clone(map.entry(key.clone()).or_default())
        };
        let _held = guard.lock().expect("key lock");
        if let Some(hit) = self.cache.get(&key) {
            self.cache_hits.fetch_add(1, Ordering::SeqCst);
            return Ok(hit);
        }

        let value = self.invoke_with_retry(request)?;
        let stored = self
            .cache
            .insert(&key, &request.source_lang, &request.target_lang, &request.text, &value)
            .map_err(|e| TranslateError::Cache(e.to_string()))?;
        self.in_flight.lock().expect("in-flight lock").remove(&key);
        Ok(stored)
    }

    fn invoke_with_retry(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        let mut attempts = 0u32;
        loop {
            self.limiter.acquire();
            attempts += 1;
            self.invocations.fetch_add(1, Ordering::SeqCst);
            match self.backend.translate(request) {
                Ok(text) if !text.trim().is_empty() => return Ok(text),
                Ok(_) => {
                    return Err(TranslateError::Backend {
                        attempts,
                        message: "backend returned empty text".into(),
                    })
                }
                Err(super::BackendError::Unsupported {
                    source_lang,
                    target_lang,
                }) => {
                    return Err(TranslateError::Capability {
                        source_lang,
                        target_lang,
                    })
                }
                Err(e) if e.is_retryable() && attempts <= self.policy.max_retries => {
                    log::debug!("retrying after attempt {attempts}: {e}");
                    std::thread::sleep(self.policy.backoff(attempts - 1));
                }
                Err(e) => {
                    return Err(TranslateError::Backend {
                        attempts,
                        message: e.to_string(),
                    })
                }
            }
        }
    }

    /// Translates every request, running up to `max_concurrent_requests` at
    /// once. Identical requests are sent once and share the result. The
    /// output is aligned with the input.
    pub fn translate_batch(&self, requests: &[TranslationRequest]) -> Vec<Result<String, TranslateError>> {
        let mut unique: Vec<&TranslationRequest> = Vec::new();
        let mut slot_of: HashMap<&TranslationRequest, usize> = HashMap::new();
        let mut mapping: Vec<Result<usize, TranslateError>> = Vec::with_capacity(requests.len());
        for req in requests {
            mapping.push(req.validate().map(|_| {
                *slot_of.entry(req).or_insert_with(|| {
                    unique.push(req);
                    unique.len() - 1
                })
            }));
        }

        let results: Vec<Mutex<Option<Result<String, TranslateError>>>> =
            (0..unique.len()).map(|_| Mutex::new(None)).collect();
        let cursor = AtomicUsize::new(0);
        let workers = self.policy.max_concurrent_requests.min(unique.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = cursor.fetch_add(1, Ordering::SeqCst);
                    if i >= unique.len() {
                        break;
                    }
                    let outcome = self.translate(unique[i]);
                    *results[i].lock().expect("result slot") = Some(outcome);
                });
            }
        });

        let results: Vec<Result<String, TranslateError>> = results
            .into_iter()
            .map(|slot| slot.into_inner().expect("result slot").expect("every slot filled"))
            .collect();
        mapping
            .into_iter()
            .map(|m| m.and_then(|i| results[i].clone()))
            .collect()
    }
}

//! Deterministic offline translator.
//!
//! Forward (`source -> pivot`): prepend the marker `⟦<pivot>⟧` and reverse
//! the word order. Backward (`pivot -> source`, recognised by a leading
//! `⟦<pivot>⟧` marker): strip the marker, reverse the words back, then
//! replace each word found in the lexicon with probability
//! `substitution_rate`.
//!
//! Words are the pieces between single ASCII spaces, so a forward/backward
//! round trip restores the text byte for byte when nothing is substituted.
//!
//! The substitution draw for word `i` hashes, with SHA-256,
//! `"betkit-mock-v1" || seed (u64 LE) || SHA-256(backward input text) || i (u64 LE)`.
//! The first eight digest bytes, read as a little-endian `u64`, are shifted
//! right by 11 and scaled by `2^-53` into `u`. The word is replaced iff
//! `u < substitution_rate`.

use std::collections::BTreeMap;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::{BackendError, TranslationBackend, TranslationRequest};

pub const BUNDLED_LEXICON: &str = include_str!("../../data/synonyms.tsv");

const DRAW_DOMAIN: &[u8] = b"betkit-mock-v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MockConfig {
    pub substitution_rate: f64,
    pub seed: u64,
}

impl Default for MockConfig {
    fn default() -> Self {
        Self {
            substitution_rate: 0.0,
            seed: 42,
        }
    }
}

/// Word-to-replacement table used by the backward direction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon(BTreeMap<String, String>);

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `word<TAB>replacement` lines; `#` starts a comment line.
    pub fn parse(raw: &str) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for (i, line) in raw.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('\t') {
                Some((w, r)) if !w.is_empty() && !r.is_empty() && !r.contains('\t') => {
                    map.insert(w.to_string(), r.to_string());
                }
                _ => return Err(format!("lexicon line {}: expected `word<TAB>replacement`", i + 1)),
            }
        }
        Ok(Self(map))
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn insert(&mut self, word: impl Into<String>, replacement: impl Into<String>) {
        self.0.insert(word.into(), replacement.into());
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        self.0.get(word).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Short digest of the contents, part of the mock backend id.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (w, r) in &self.0 {
            h.update(w.as_bytes());
            h.update([0]);
            h.update(r.as_bytes());
            h.update([0]);
        }
        hex::encode(&h.finalize()[..4])
    }
}

impl FromIterator<(String, String)> for Lexicon {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

fn marker(code: &str) -> String {
    format!("⟦{code}⟧")
}

fn reverse_words(text: &str) -> String {
    let mut words: Vec<&str> = text.split(' ').collect();
    words.reverse();
    words.join(" ")
}

fn substitution_draw(seed: u64, text: &str, index: usize) -> f64 {
    let mut h = Sha256::new();
    h.update(DRAW_DOMAIN);
    h.update(seed.to_le_bytes());
    h.update(Sha256::digest(text.as_bytes()));
    h.update((index as u64).to_le_bytes());
    let digest = h.finalize();
    let x = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn mock_translate(text: &str, source: &str, target: &str, config: &MockConfig, lexicon: &Lexicon) -> String {
    let source_marker = marker(source);
    let body = text
        .strip_prefix(source_marker.as_str())
        .map(|rest| rest.strip_prefix(' ').unwrap_or(rest));
    match body {
        Some(body) => {
            let restored = reverse_words(body);
            restored
                .split(' ')
                .enumerate()
                .map(|(i, word)| match lexicon.get(word) {
                    Some(replacement) if substitution_draw(config.seed, text, i) < config.substitution_rate => {
                        replacement
                    }
                    _ => word,
                })
                .collect::<Vec<_>>()
                .join(" ")
        }
        None => format!("{} {}", marker(target), reverse_words(text)),
    }
}

/// [`TranslationBackend`] over [`mock_translate`].
#[derive(Debug, Clone)]
pub struct MockBackend {
    config: MockConfig,
    lexicon: Arc<Lexicon>,
}

impl MockBackend {
    pub fn new(config: MockConfig, lexicon: Lexicon) -> Self {
        Self {
            config,
            lexicon: Arc::new(lexicon),
        }
    }

    pub fn config(&self) -> &MockConfig {
        &self.config
    }
}

impl TranslationBackend for MockBackend {
    fn id(&self) -> String {
        format!(
            "mock-v1-r{}-s{}-lex{}",
            self.config.substitution_rate,
            self.config.seed,
            self.lexicon.fingerprint()
        )
    }

    fn translate(&self, request: &TranslationRequest) -> Result<String, BackendError> {
        Ok(mock_translate(
            &request.text,
            &request.source_lang,
            &request.target_lang,
            &self.config,
            &self.lexicon,
        ))
    }
}

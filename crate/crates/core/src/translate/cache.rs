//! Append-only translation cache.
//!
//! Entries live in memory and, when the cache is backed by a directory, in
//! `<cache_dir>/<backend_id>.jsonl` with one JSON object per line. The file
//! is loaded on open and only ever appended to.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Hex SHA-256 over the length-prefixed fields, so no two distinct tuples
/// share an encoding.
pub fn cache_key(backend_id: &str, source_lang: &str, target_lang: &str, text: &str) -> String {
    let mut h = Sha256::new();
    for field in [backend_id, source_lang, target_lang, text] {
        h.update((field.len() as u64).to_le_bytes());
        h.update(field.as_bytes());
    }
    hex::encode(h.finalize())
}

pub fn text_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub src: String,
    pub tgt: String,
    pub text_digest: String,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

pub struct TranslationCache {
    entries: RwLock<HashMap<String, String>>,
    file: Option<Mutex<File>>,
    path: Option<PathBuf>,
}

impl TranslationCache {
    pub fn in_memory() -> Self {
        Self {
            entries: RwLock::new(HashMap::new()),
            file: None,
            path: None,
        }
    }

    /// Opens (or creates) the cache file for `backend_id` under `dir`.
    /// A torn final line left by a crash is skipped.
    pub fn open(dir: &Path, backend_id: &str) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.jsonl", file_safe(backend_id)));
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheEntry>(&line) {
                    Ok(entry) => {
                        entries.entry(entry.key).or_insert(entry.value);
                    }
                    Err(e) => log::warn!("{}:{}: skipping unreadable cache entry: {e}", path.display(), i + 1),
                }
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        let raw = std::fs::read(&path)?;
        if raw.last().is_some_and(|&b| b != b'\n') {
            file.write_all(b"\n")?;
        }
        Ok(Self {
            entries: RwLock::new(entries),
            file: Some(Mutex::new(file)),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records a translation. Existing entries are never overwritten; the
    /// stored value is returned either way.
    pub fn insert(&self, key: &str, src: &str, tgt: &str, text: &str, value: &str) -> std::io::Result<String> {
        let mut entries = self.entries.write().expect("cache lock");
        if let Some(existing) = entries.get(key) {
            return Ok(existing.clone());
        }
        if let Some(file) = &self.file {
            let entry = CacheEntry {
                key: key.to_string(),
                src: src.to_string(),
                tgt: tgt.to_string(),
                text_digest: text_digest(text),
                value: value.to_string(),
                created_at: Some(chrono::Utc::now().to_rfc3339()),
            };
            let mut line = serde_json::to_string(&entry).expect("cache entries serialize");
            line.push('\n');
            let mut f = file.lock().expect("cache file lock");
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        entries.insert(key.to_string(), value.to_string());
        Ok(value.to_string())
    }
}

fn file_safe(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

//! The file handed to a trainer adapter.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{TrainerConfig, TrainerError};
use crate::fsutil;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub model: String,
    pub dataset: String,
    pub language: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub train: PathBuf,
    pub dev: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerManifest {
    pub cell: CellId,
    pub files: ManifestFiles,
    pub config: TrainerConfig,
    /// Where the adapter must write its metrics record.
    pub output: PathBuf,
}

impl TrainerManifest {
    pub fn read(path: &Path) -> Result<Self, TrainerError> {
        let text = std::fs::read_to_string(path).map_err(|e| TrainerError::Io(format!("{}: {e}", path.display())))?;
        let manifest: Self =
            serde_json::from_str(&text).map_err(|e| TrainerError::Io(format!("{}: {e}", path.display())))?;
        manifest.config.validate().map_err(TrainerError::Io)?;
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<(), TrainerError> {
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        fsutil::write_atomic(path, json.as_bytes()).map_err(|e| TrainerError::Io(format!("{}: {e}", path.display())))
    }

    /// Every referenced input file must exist.
    pub fn check_files(&self) -> Result<(), TrainerError> {
        for p in [&self.files.train, &self.files.dev, &self.files.test] {
            if !p.is_file() {
                return Err(TrainerError::Io(format!("missing corpus file {}", p.display())));
            }
        }
        Ok(())
    }
}

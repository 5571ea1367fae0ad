//! Trainer adapters: manifest in, metrics record out.
//!
//! The harness never hands labels or predictions to an adapter directly. The
//! adapter reads the files named in the manifest, computes its own metrics
//! and writes one results-store record to the manifest's `output` path; the
//! harness only validates that record.

use std::fs::File;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{TrainerError, TrainerManifest};
use crate::metrics::{EvalMetrics, ResultRecord};

pub const DEFAULT_TRAINER_TIMEOUT: Duration = Duration::from_secs(24 * 60 * 60);

const POLL_INTERVAL: Duration = Duration::from_millis(20);

pub trait Trainer: Send + Sync {
    fn name(&self) -> String;

    /// Trains and evaluates one cell, writing the metrics record to
    /// `manifest.output`.
    fn run(&self, manifest_path: &Path, manifest: &TrainerManifest) -> Result<(), TrainerError>;
}

/// External process launched as `<program> <args..> <manifest-path>`.
#[derive(Debug, Clone)]
pub struct CommandTrainer {
    program: String,
    args: Vec<String>,
    timeout: Duration,
}

impl CommandTrainer {
    /// Splits `command` on whitespace into program and leading arguments.
    pub fn parse(command: &str, timeout: Duration) -> Result<Self, TrainerError> {
        let mut parts = command.split_whitespace().map(String::from);
        let program = parts.next().ok_or_else(|| TrainerError::Launch {
            command: command.to_string(),
            reason: "empty adapter command".into(),
        })?;
        Ok(Self {
            program,
            args: parts.collect(),
            timeout,
        })
    }

    fn command_line(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl Trainer for CommandTrainer {
    fn name(&self) -> String {
        self.command_line()
    }

    fn run(&self, manifest_path: &Path, _manifest: &TrainerManifest) -> Result<(), TrainerError> {
        let launch_err = |reason: String| TrainerError::Launch {
            command: self.command_line(),
            reason,
        };
        let log_path = manifest_path.with_file_name("adapter.log");
        let log = File::create(&log_path).map_err(|e| launch_err(e.to_string()))?;
        let log_err = log.try_clone().map_err(|e| launch_err(e.to_string()))?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg(manifest_path)
            .stdin(Stdio::null())
            .stdout(log)
            .stderr(log_err)
            .spawn()
            .map_err(|e| launch_err(e.to_string()))?;

        let started = Instant::now();
        let status = loop {
            match child.try_wait().map_err(|e| TrainerError::Io(e.to_string()))? {
                Some(status) => break status,
                None if started.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(TrainerError::Timeout(self.timeout));
                }
                None => std::thread::sleep(POLL_INTERVAL),
            }
        };
        if !status.success() {
            return Err(TrainerError::NonZeroExit(status.to_string()));
        }
        Ok(())
    }
}

/// Runs `trainer` on a manifest already written to `manifest_path` and
/// returns the validated metrics it recorded.
pub fn invoke_trainer(
    trainer: &dyn Trainer,
    manifest_path: &Path,
    manifest: &TrainerManifest,
) -> Result<EvalMetrics, TrainerError> {
    manifest.check_files()?;
    match std::fs::remove_file(&manifest.output) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(TrainerError::Io(e.to_string())),
    }
    trainer.run(manifest_path, manifest)?;

    let text = std::fs::read_to_string(&manifest.output)
        .map_err(|_| TrainerError::MissingOutput(manifest.output.display().to_string()))?;
    let record: ResultRecord = serde_json::from_str(text.trim()).map_err(|e| TrainerError::Schema(e.to_string()))?;
    record.validate().map_err(TrainerError::Schema)?;
    if record.is_failed() {
        return Err(TrainerError::Schema(format!(
            "adapter reported an error: {}",
            record.error.unwrap_or_default()
        )));
    }
    let cell = &manifest.cell;
    if record.triple() != (cell.model.as_str(), cell.dataset.as_str(), cell.language.as_str()) {
        return Err(TrainerError::Schema(format!(
            "record is for {}/{}/{}, expected {}/{}/{}",
            record.model, record.dataset, record.language, cell.model, cell.dataset, cell.language
        )));
    }
    Ok(record.metrics().expect("validated success record"))
}

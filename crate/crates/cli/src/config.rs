//! Training configuration resolution and the persisted run manifest.
//!
//! Tuning values resolve with the precedence command-line flag > config
//! file > built-in default, and the fully resolved result is written to
//! `manifest.json` so any run can be reproduced from its artifacts alone.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::{CliError, TrainArgs};

pub const DEFAULT_VAL_FRACTION: f64 = 0.25;
pub const DEFAULT_LR: f64 = 0.001;
pub const DEFAULT_BATCH: usize = 64;
pub const DEFAULT_EPOCHS: usize = 5;
pub const DEFAULT_RUNS: usize = 5;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_HIDDEN: usize = 64;

/// Optional tuning values read from a `--config` TOML file. Unknown keys
/// are rejected so typos cannot silently fall back to defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub val_fraction: Option<f64>,
    pub lr: Option<f64>,
    pub batch: Option<usize>,
    pub epochs: Option<usize>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub hidden: Option<usize>,
}

pub fn load_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|err| CliError::Usage(format!("config file {}: {err}", path.display())))?;
    toml::from_str(&text)
        .map_err(|err| CliError::Usage(format!("config file {}: {err}", path.display())))
}

/// Every tuning value pinned down; what `train` actually runs with.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedTraining {
    pub val_fraction: f64,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub runs: usize,
    pub seed: u64,
    pub hidden: usize,
}

pub fn resolve_training(args: &TrainArgs, file: &FileConfig) -> ResolvedTraining {
    ResolvedTraining {
        val_fraction: args
            .val_fraction
            .or(file.val_fraction)
            .unwrap_or(DEFAULT_VAL_FRACTION),
        lr: args.lr.or(file.lr).unwrap_or(DEFAULT_LR),
        batch: args.batch.or(file.batch).unwrap_or(DEFAULT_BATCH),
        epochs: args.epochs.or(file.epochs).unwrap_or(DEFAULT_EPOCHS),
        runs: args.runs.or(file.runs).unwrap_or(DEFAULT_RUNS),
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        hidden: args.hidden.or(file.hidden).unwrap_or(DEFAULT_HIDDEN),
    }
}

/// Record of a command's resolved inputs, written next to its outputs.
///
/// All artifacts except the two timestamp fields are bitwise reproducible
/// from the manifest: rerun the same tool version with the recorded
/// configuration and the checkpoint, logs, and reports come out identical.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub tool_version: &'static str,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn begin(command: &'static str, config: serde_json::Value) -> Self {
        Self {
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            started_unix: unix_now(),
            finished_unix: None,
            config,
        }
    }

    pub fn finish(&mut self) {
        self.finished_unix = Some(unix_now());
    }

    /// Writes `manifest.json` into `dir`. Called once up front so a
    /// failed run still leaves its configuration behind, and again after
    /// `finish` to record the end timestamp.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join("manifest.json");
        let body = serde_json::to_string_pretty(self)
            .map_err(|err| CliError::Runtime(format!("manifest serialization: {err}")))?;
        fs::write(&path, body + "\n")
            .map_err(|err| CliError::Runtime(format!("writing {}: {err}", path.display())))?;
        Ok(())
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

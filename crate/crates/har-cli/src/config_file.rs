//! The TOML configuration file shared by every subcommand.
//!
//! Layout:
//!
//! ```toml
//! [pipeline]            # signal chain, all keys optional
//! cutoff_hz = 20.0
//! stride = 40
//!
//! [experiment]          # defaults for flags, all keys optional
//! master_seed = 100
//! output_dir = "reports"
//!
//! [overrides.gb]        # per-algorithm hyperparameter overrides
//! n_estimators = 100
//!
//! [grid]                # required by `gridsearch` only
//! algorithm = "knn"
//! [[grid.param]]
//! name = "n_neighbors"
//! values = [3, 6, 9]
//! ```
//!
//! Command-line flags take precedence over `[experiment]` values, which in
//! turn take precedence over built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use har_core::classifiers::{Algorithm, ClassifierSpec, ParamValue};
use har_core::evaluation::GridSpec;
use har_core::{Error, PipelineConfig, Result};
use serde::{Deserialize, Serialize};

/// Flag defaults that live in the file rather than on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentDefaults {
    /// Comma-separated algorithm tags, or "all".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithms: Option<String>,
    /// Comma-separated representation names, or "all".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub representations: Option<String>,
    /// Replaces `random_state` on every classifier spec when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// Held-out subject for grid search; highest id when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_subject: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

/// Parsed configuration file. `Default` is a valid, empty configuration,
/// so every command runs without one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub pipeline: PipelineConfig,
    pub experiment: ExperimentDefaults,
    /// Keyed by algorithm tag or long name; values feed `set_param`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, BTreeMap<String, ParamValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl FileConfig {
    pub fn from_toml_str(text: &str) -> Result<FileConfig> {
        let cfg: FileConfig =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read and validate a config file. All failures, including a missing
    /// file, are configuration mistakes, not data errors.
    pub fn from_path(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
        })?;
        FileConfig::from_toml_str(&text)
    }

    /// Load `path` when given, otherwise the all-defaults configuration.
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        match path {
            Some(p) => FileConfig::from_path(p),
            None => Ok(FileConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        for key in self.overrides.keys() {
            Algorithm::parse(key)
                .map_err(|e| Error::InvalidArgument(format!("[overrides] table: {e}")))?;
        }
        // The grid is validated by the gridsearch command; a config whose
        // grid is still being drafted must not break the other commands.
        Ok(())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Apply the `[overrides]` entries matching the spec's algorithm.
    /// Tags and long names target the same algorithm, so both work as keys.
    pub fn apply_overrides(&self, spec: &mut ClassifierSpec) -> Result<()> {
        for (key, params) in &self.overrides {
            if Algorithm::parse(key)? != spec.algorithm() {
                continue;
            }
            for (name, value) in params {
                spec.set_param(name, value)?;
            }
        }
        Ok(())
    }
}

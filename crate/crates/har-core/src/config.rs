//! Pipeline configuration shared by the library and the command line tool.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the median of an even-length window is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MedianMode {
    /// Mean of the two central order statistics.
    #[default]
    Midpoint,
    /// The lower of the two central order statistics.
    Lower,
}

/// Which instance representation a classifier consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// The windowed samples themselves.
    Raw,
    /// The six summary statistics per window.
    Features,
}

impl Representation {
    pub const ALL: [Representation; 2] = [Representation::Raw, Representation::Features];

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "raw" => Ok(Representation::Raw),
            "features" | "feature" => Ok(Representation::Features),
            other => Err(Error::InvalidArgument(format!(
                "unknown representation {other:?}, expected raw or features"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Representation::Raw => "raw",
            Representation::Features => "features",
        }
    }
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Signal-chain and windowing parameters.
///
/// Defaults give the 2 s window at 40 Hz with 50 percent overlap that the
/// rest of the crate is tuned around.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Lowpass cutoff applied at the source rate, in Hz.
    pub cutoff_hz: f64,
    /// Butterworth order of one filtering pass.
    pub filter_order: usize,
    /// Rate after decimation, in Hz.
    pub target_hz: f64,
    /// Window length in samples at the target rate.
    pub window_size: usize,
    /// Offset between consecutive window starts, in samples.
    pub stride: usize,
    /// Median convention for even-length windows.
    pub median_mode: MedianMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            cutoff_hz: 20.0,
            filter_order: 4,
            target_hz: 40.0,
            window_size: 80,
            stride: 40,
            median_mode: MedianMode::Midpoint,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_hz > 0.0) || !self.cutoff_hz.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cutoff_hz must be positive and finite, got {}",
                self.cutoff_hz
            )));
        }
        if self.filter_order < 1 {
            return Err(Error::InvalidArgument(
                "filter_order must be at least 1".into(),
            ));
        }
        if !(self.target_hz > 0.0) || !self.target_hz.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "target_hz must be positive and finite, got {}",
                self.target_hz
            )));
        }
        if self.window_size < 1 {
            return Err(Error::InvalidArgument(
                "window_size must be at least 1".into(),
            ));
        }
        if self.stride < 1 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Window duration in seconds at the target rate.
    pub fn window_duration_s(&self) -> f64 {
        self.window_size as f64 / self.target_hz
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Serialize(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("pipeline config serializes")
    }
}

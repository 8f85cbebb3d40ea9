//! TOML run configuration. Every section is optional; missing keys take defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use jmfar::classifier::{GaConfig, TrainConfig};
use jmfar::synth::AudioRender;
use jmfar::{Error, Result};

use crate::pipeline::PipelineConfig;

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "JMFAR_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub pipeline: PipelineConfig,
    pub train: TrainConfig,
    pub select: GaConfig,
    pub synth: SynthConfig,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub render: AudioRender,
    /// Envelope rate used for feature tables written by `synth`.
    pub envelope_rate_hz: f64,
    /// SNR of the envelope noise in feature tables written by `synth`.
    pub envelope_snr_db: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            render: AudioRender::default(),
            envelope_rate_hz: 100.0,
            envelope_snr_db: 30.0,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Reads `explicit`, else the file named by [`CONFIG_ENV`], else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        let from_env = std::env::var_os(CONFIG_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from);
        match explicit.map(Path::to_path_buf).or(from_env) {
            Some(path) => Self::load(&path),
            None => Ok(Self::default()),
        }
    }
}

//! One TOML document holding every tunable of a run. Missing sections fall
//! back to their defaults, so an empty file is a valid configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::AttackConfig;
use crate::geometry::SensorModel;
use crate::integrity::IntegrityConfig;
use crate::perception::{CameraNoise, LidarDetectorConfig, Mono3dNoise};
use crate::safety::RssParams;
use crate::scene::RenderConfig;
use crate::tracking::FusionConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub render: RenderConfig,
    pub detector: LidarDetectorConfig,
    pub camera: CameraNoise,
    pub mono3d: Mono3dNoise,
    pub fusion: FusionConfig,
    pub rss: RssParams,
    pub attack: AttackConfig,
    /// Receiver thresholds; derived from the scene's sensor when absent.
    pub integrity: Option<IntegrityConfig>,
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serialisable")
    }

    pub fn integrity_for(&self, sensor: &SensorModel) -> IntegrityConfig {
        self.integrity
            .clone()
            .unwrap_or_else(|| IntegrityConfig::for_sensor(sensor))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.fusion
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.attack.validate().map_err(ConfigError::Invalid)?;
        if !self.rss.is_valid() {
            return Err(ConfigError::Invalid("rss parameters".into()));
        }
        if let Some(i) = &self.integrity {
            if !i.is_valid() {
                return Err(ConfigError::Invalid("integrity thresholds".into()));
            }
        }
        Ok(())
    }
}

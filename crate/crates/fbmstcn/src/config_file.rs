//! TOML run configuration.
//!
//! ```toml
//! version = 1
//! preset = "tiny"        # default | small | tiny
//! single_stage = false
//!
//! [model]                # optional; a full model table replaces the preset
//!
//! [train]
//! epochs = 20
//! ```

use crate::error::{AppError, Result};
use fbmstcn_core::model::ModelConfig;
use fbmstcn_core::train::{LossConfig, ScheduleConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Default,
    Small,
    Tiny,
}

impl Preset {
    pub fn config(self) -> ModelConfig {
        match self {
            Preset::Default => ModelConfig::default(),
            Preset::Small => ModelConfig::small(),
            Preset::Tiny => ModelConfig::tiny(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSettings {
    pub epochs: usize,
    /// Every n-th manifest record is held out for validation.
    pub val_every: usize,
    pub schedule: ScheduleConfig,
    /// Loss weights; the compression exponent comes from the model.
    pub lambda: f64,
    pub beta: f64,
}

impl TrainSettings {
    pub fn loss(&self, model: &ModelConfig) -> LossConfig {
        LossConfig {
            lambda: self.lambda,
            beta: self.beta,
            c: model.compression,
        }
    }
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            epochs: 20,
            val_every: 5,
            schedule: ScheduleConfig::default(),
            lambda: LossConfig::default().lambda,
            beta: LossConfig::default().beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub preset: Preset,
    #[serde(default)]
    pub single_stage: bool,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub train: TrainSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            preset: Preset::Default,
            single_stage: false,
            model: None,
            train: TrainSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_preset(preset: Preset) -> Self {
        Self {
            preset,
            ..Self::default()
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| AppError::Usage(format!("config: {e}")))?;
        if cfg.version != CONFIG_VERSION {
            return Err(AppError::Usage(format!(
                "config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        cfg.model_config().validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// The network configuration this file describes.
    pub fn model_config(&self) -> ModelConfig {
        let cfg = self.model.clone().unwrap_or_else(|| self.preset.config());
        if self.single_stage {
            cfg.single_stage()
        } else {
            cfg
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let c = RunConfig::parse("version = 1\npreset = \"tiny\"\n").unwrap();
        assert_eq!(c.model_config(), ModelConfig::tiny());
        assert_eq!(c.train, TrainSettings::default());
    }

    #[test]
    fn full_round_trip() {
        let mut c = RunConfig::from_preset(Preset::Small);
        c.model = Some(ModelConfig::scaled(16));
        c.train.epochs = 3;
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_version_and_unknown_keys() {
        assert!(RunConfig::parse("version = 2").is_err());
        assert!(RunConfig::parse("version = 1\nfoo = 3").is_err());
        assert!(RunConfig::parse("preset = \"tiny\"").is_err());
    }
}

//! Run configuration read from TOML or JSON.

use std::path::Path;

use ayn_core::model::ModelConfig;
use ayn_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{AynError, Result};
use crate::io::read_text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Tail fraction of the training file held out for epoch selection; 0 disables it.
    pub validation_fraction: f64,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            validation_fraction: 0.1,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    /// `.toml` files are TOML, everything else JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let err = |message: String| AynError::Config {
            path: path.to_path_buf(),
            message,
        };
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
            toml::from_str(&text).map_err(|e| err(e.to_string()))
        } else {
            serde_json::from_str(&text).map_err(|e| err(e.to_string()))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(AynError::Invalid("validation_fraction must lie in [0, 1)".into()));
        }
        if self.train.epochs == 0 {
            return Err(AynError::Invalid("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

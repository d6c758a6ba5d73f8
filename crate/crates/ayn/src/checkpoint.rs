//! Model checkpoints: parameters, configuration, seed and training log.

use std::path::Path;

use ayn_core::init::{INIT_SCHEME, RNG_NAME};
use ayn_core::model::VqaModel;
use ayn_core::train::TrainingLog;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{AynError, Result};
use crate::io::{read_text, write_text};

pub const CHECKPOINT_FORMAT: &str = "ayn-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub seed: u64,
    pub rng: String,
    pub init: String,
    pub config: RunConfig,
    pub model: VqaModel,
    pub log: TrainingLog,
}

impl Checkpoint {
    pub fn new(config: RunConfig, model: VqaModel, log: TrainingLog) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            seed: config.seed,
            rng: RNG_NAME.into(),
            init: INIT_SCHEME.into(),
            config,
            model,
            log,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let c: Checkpoint = serde_json::from_str(&text).map_err(|e| AynError::format(path, e.line(), e.to_string()))?;
        if c.format != CHECKPOINT_FORMAT {
            return Err(AynError::format(
                path,
                0,
                format!("unsupported checkpoint format {:?}", c.format),
            ));
        }
        Ok(c)
    }
}

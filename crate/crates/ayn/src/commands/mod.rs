//! Subcommand implementations.

mod baseline;
mod eval;
mod predict;
mod report;
pub mod synth;
mod train;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use baseline::baseline;
pub use eval::eval;
pub use predict::predict;
pub use report::{render_curves_svg, report};
pub use synth::synth;
pub use train::train;

use crate::cli::{Cli, Command};
use crate::error::{AynError, Result};
use crate::io::read_text;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => train(&a),
        Command::Predict(a) => predict(&a),
        Command::Eval(a) => eval(&a),
        Command::Baseline(a) => baseline(&a),
        Command::Report(a) => report(&a),
        Command::Synth(a) => synth(&a),
    }
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionLine {
    pub id: String,
    pub answer: String,
}

pub fn write_predictions(path: &Path, lines: &[PredictionLine]) -> Result<()> {
    let mut out = String::new();
    for l in lines {
        out.push_str(&serde_json::to_string(l).expect("prediction serializes"));
        out.push('\n');
    }
    crate::io::write_text(path, &out)
}

/// Reads a predictions file into id → answer; duplicate ids are an error.
pub fn load_predictions(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = read_text(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: PredictionLine = serde_json::from_str(line).map_err(|e| AynError::format(path, i + 1, e.to_string()))?;
        if out.insert(p.id.clone(), p.answer).is_some() {
            return Err(AynError::format(
                path,
                i + 1,
                format!("duplicate prediction id {:?}", p.id),
            ));
        }
    }
    Ok(out)
}

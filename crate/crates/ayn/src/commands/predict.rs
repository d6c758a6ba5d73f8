use log::warn;

use super::{write_predictions, PredictionLine};
use crate::checkpoint::Checkpoint;
use crate::cli::PredictArgs;
use crate::error::{AynError, Result};
use crate::io::{load_features, load_qa};

pub fn predict(args: &PredictArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let model = &ckpt.model;
    let test = load_qa(&args.test, args.test_format)?;
    let features = match (&args.features, model.uses_visual()) {
        (Some(p), true) => {
            let f = load_features(p, args.features_format)?;
            if f.dim() != model.visual_dim {
                return Err(AynError::Invalid(format!(
                    "feature dimension {} does not match the checkpoint's {}",
                    f.dim(),
                    model.visual_dim
                )));
            }
            Some(f)
        }
        (None, true) => return Err(AynError::MissingResource("image features (--features)")),
        (_, false) => None,
    };
    let mut lines = Vec::with_capacity(test.len());
    let mut missing = 0usize;
    for inst in &test {
        let visual = features.as_ref().and_then(|f| f.get(&inst.image));
        let answer = if model.uses_visual() && visual.is_none() {
            missing += 1;
            String::new()
        } else {
            model.predict(&inst.question, visual)?.answer.canonical()
        };
        lines.push(PredictionLine {
            id: inst.id.clone(),
            answer,
        });
    }
    if missing > 0 {
        warn!("{missing} test instances had no image features and were left unanswered");
    }
    write_predictions(&args.out, &lines)
}

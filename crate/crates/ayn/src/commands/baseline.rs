use ayn_core::baselines::{constant_baseline, LookupTable, NnQuestionOnly, NnVisual, PerTypeConstant};
use log::warn;

use super::{write_predictions, PredictionLine};
use crate::cli::{BaselineArgs, BaselineKind};
use crate::error::{AynError, Result};
use crate::io::{load_embeddings, load_features, load_qa};

pub fn baseline(args: &BaselineArgs) -> Result<()> {
    let train = load_qa(&args.train, args.format)?;
    let test = load_qa(&args.test, args.format)?;
    let embeddings = || match &args.embeddings {
        Some(p) => load_embeddings(p),
        None => Err(AynError::MissingResource("word vectors (--embeddings)")),
    };
    let answers: Vec<String> = match args.kind {
        BaselineKind::Constant => {
            let a = constant_baseline(&train)?.canonical();
            test.iter().map(|_| a.clone()).collect()
        }
        BaselineKind::PerType => {
            let m = PerTypeConstant::fit(&train)?;
            test.iter().map(|i| m.answer(&i.question).canonical()).collect()
        }
        BaselineKind::Lookup => {
            let m = LookupTable::fit(&train, args.strip_articles);
            test.iter().map(|i| m.answer(&i.question).canonical()).collect()
        }
        BaselineKind::NnQuestion => {
            let emb = embeddings()?;
            let m = NnQuestionOnly::fit(&train, &emb, args.mean)?;
            test.iter().map(|i| m.answer(&i.question, &emb).canonical()).collect()
        }
        BaselineKind::NnVisual => {
            let emb = embeddings()?;
            let features = match &args.features {
                Some(p) => load_features(p, args.features_format)?,
                None => return Err(AynError::MissingResource("image features (--features)")),
            };
            let m = NnVisual::fit(&train, &emb, args.mean, args.k)?;
            let mut skipped = 0;
            let mut missing = 0;
            let out = test
                .iter()
                .map(|i| {
                    let image = features.get(&i.image);
                    missing += usize::from(image.is_none());
                    let a = m.answer(&i.question, image, &emb, &features);
                    skipped += a.skipped;
                    a.answer.canonical()
                })
                .collect();
            if missing > 0 {
                warn!("{missing} test images had no features; their answers use the question ranking only");
            }
            if skipped > 0 {
                warn!("{skipped} candidate training images had no features");
            }
            out
        }
    };
    let lines: Vec<PredictionLine> = test
        .iter()
        .zip(answers)
        .map(|(i, answer)| PredictionLine {
            id: i.id.clone(),
            answer,
        })
        .collect();
    write_predictions(&args.out, &lines)
}

//! Mini-batch training with per-epoch validation and best-epoch selection on
//! box-filtered validation accuracy.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{select_training_answer, AnswerSet, AnswerStrategy, QaInstance, VisualFeatureStore};
use crate::error::{Error, Result};
use crate::model::VqaModel;
use crate::optim::{OptimizerKind, OptimizerState};
use crate::tape::Tape;
use crate::tensor::ParamStore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub answer_strategy: AnswerStrategy,
    /// Width of the centered box filter over validation accuracy; 1 disables it.
    pub smoothing_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 128,
            optimizer: OptimizerKind::default(),
            answer_strategy: AnswerStrategy::Random,
            smoothing_window: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub validation_accuracy: Option<f64>,
    pub smoothed_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub skipped_missing_features: usize,
    pub skipped_out_of_class: usize,
}

/// Exact-set accuracy of `model` against each instance's most frequent
/// reference; instances without features count as wrong.
pub fn evaluate_accuracy(
    model: &VqaModel,
    instances: &[QaInstance],
    features: Option<&VisualFeatureStore>,
) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::Empty("evaluation instances"));
    }
    let mut correct = 0usize;
    for inst in instances {
        let visual = features.and_then(|f| f.get(&inst.image));
        if model.uses_visual() && visual.is_none() {
            continue;
        }
        let pred = model.predict(&inst.question, visual)?;
        if pred.answer == crate::baselines::training_label(inst) {
            correct += 1;
        }
    }
    Ok(correct as f64 / instances.len() as f64)
}

/// Centered moving average with the window truncated at the sequence ends.
pub fn box_filter(values: &[f64], window: usize) -> Vec<f64> {
    let half = window.max(1) / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

struct Example<'a> {
    question: &'a [alloc::string::String],
    visual: Option<&'a [f64]>,
    answer: AnswerSet,
    weight: f64,
}

/// Trains `model` in place and leaves it holding the best epoch's parameters.
/// Without validation data the last epoch is kept.
pub fn train<R: Rng + ?Sized>(
    model: &mut VqaModel,
    train: &[QaInstance],
    validation: &[QaInstance],
    features: Option<&VisualFeatureStore>,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<TrainingLog> {
    if config.epochs == 0 {
        return Err(Error::precondition("epochs must be at least 1"));
    }
    if config.batch_size == 0 {
        return Err(Error::precondition("batch size must be at least 1"));
    }
    if train.is_empty() {
        return Err(Error::Empty("training instances"));
    }
    let mut log = TrainingLog::default();
    let mut usable: Vec<(&QaInstance, Option<&[f64]>)> = Vec::with_capacity(train.len());
    for inst in train {
        let visual = features.and_then(|f| f.get(&inst.image));
        if model.uses_visual() && visual.is_none() {
            log.skipped_missing_features += 1;
        } else {
            usable.push((inst, visual));
        }
    }
    log.skipped_out_of_class = usable
        .iter()
        .filter(|(i, _)| !i.answers.iter().any(|a| model.can_learn(a)))
        .count();

    let mut optimizer = OptimizerState::new(config.optimizer, &model.params);
    let half = config.smoothing_window.max(1) / 2;
    let mut raw_accuracy: Vec<f64> = Vec::new();
    // Snapshots of epochs whose smoothed accuracy is not final yet.
    let mut pending: VecDeque<(usize, ParamStore)> = VecDeque::new();
    let mut best: Option<(f64, usize, ParamStore)> = None;
    let mut order: Vec<usize> = (0..usable.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(rng);
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        for batch in order.chunks(config.batch_size) {
            let mut examples = Vec::new();
            for &i in batch {
                let (inst, visual) = usable[i];
                for (answer, weight) in select_training_answer(inst, config.answer_strategy, rng)? {
                    if model.can_learn(&answer) {
                        examples.push(Example {
                            question: &inst.question,
                            visual,
                            answer,
                            weight,
                        });
                    }
                }
            }
            if examples.is_empty() {
                continue;
            }
            let scale = 1.0 / batch.len() as f64;
            model.params.zero_grads();
            for ex in &examples {
                let grads = {
                    let mut tape = Tape::new(&model.params);
                    let built = model
                        .loss(&mut tape, ex.question, ex.visual, &ex.answer)
                        .map_err(|e| diverged(e, epoch))?;
                    let Some(loss) = built else {
                        continue;
                    };
                    let value = tape.scalar(loss)?;
                    if !value.is_finite() {
                        return Err(Error::Diverged { epoch });
                    }
                    loss_sum += value * ex.weight;
                    let weighted = tape.scale(loss, ex.weight * scale)?;
                    tape.backward(weighted).map_err(|e| diverged(e, epoch))?
                };
                model.params.accumulate(&grads)?;
            }
            loss_count += batch.len();
            optimizer.step(&mut model.params).map_err(|e| diverged(e, epoch))?;
        }
        let mean_loss = if loss_count > 0 {
            loss_sum / loss_count as f64
        } else {
            0.0
        };
        if !mean_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        model.params.zero_grads();

        let validation_accuracy = if validation.is_empty() {
            None
        } else {
            Some(evaluate_accuracy(model, validation, features)?)
        };
        log.epochs.push(EpochRecord {
            epoch,
            mean_loss,
            validation_accuracy,
            smoothed_accuracy: None,
        });
        if let Some(acc) = validation_accuracy {
            raw_accuracy.push(acc);
            pending.push_back((epoch, model.params.clone()));
            // Epoch `epoch − half` now has its full window.
            while let Some((e, _)) = pending.front() {
                if *e + half > epoch {
                    break;
                }
                let (e, params) = pending.pop_front().expect("front exists");
                consider(&mut best, &raw_accuracy, e, half, params);
            }
        }
    }
    while let Some((e, params)) = pending.pop_front() {
        consider(&mut best, &raw_accuracy, e, half, params);
    }

    let smoothed = box_filter(&raw_accuracy, config.smoothing_window);
    for (rec, s) in log.epochs.iter_mut().zip(&smoothed) {
        rec.smoothed_accuracy = Some(*s);
    }
    match best {
        Some((_, epoch, params)) => {
            model.params = params;
            log.best_epoch = epoch;
        }
        None => log.best_epoch = config.epochs,
    }
    Ok(log)
}

fn diverged(e: Error, epoch: usize) -> Error {
    match e {
        Error::NonFinite(_) => Error::Diverged { epoch },
        other => other,
    }
}

/// Smoothed accuracy of 1-based `epoch` over the values seen so far.
fn consider(best: &mut Option<(f64, usize, ParamStore)>, raw: &[f64], epoch: usize, half: usize, params: ParamStore) {
    let i = epoch - 1;
    let lo = i.saturating_sub(half);
    let hi = (i + half + 1).min(raw.len());
    let s = raw[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
    // Strict comparison keeps the earliest epoch among equals.
    if best.as_ref().is_none_or(|(b, _, _)| s > *b) {
        *best = Some((s, epoch, params));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::seeded;
    use crate::model::{build_vocabularies, DecoderKind, EncoderKind, ModelConfig};
    use alloc::vec;

    #[test]
    fn box_filter_is_centered_and_truncated() {
        assert_eq!(box_filter(&[0.0, 3.0, 0.0, 3.0], 3), vec![1.5, 1.0, 2.0, 1.5]);
        assert_eq!(box_filter(&[1.0, 2.0], 1), vec![1.0, 2.0]);
    }

    fn tiny() -> (VqaModel, Vec<QaInstance>) {
        let data: Vec<QaInstance> = ["left", "right", "left", "right", "left", "right"]
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let q = vec!["go".into(), (*w).into()];
                QaInstance::new(alloc::format!("{i}"), "img", q, vec![AnswerSet::parse(w)]).unwrap()
            })
            .collect();
        let cfg = ModelConfig {
            encoder: EncoderKind::Bow,
            embed_dim: 4,
            use_visual: false,
            decoder: DecoderKind::Classify,
            top_k: 5,
            ..ModelConfig::default()
        };
        let (vocab, space) = build_vocabularies(&cfg, &data).unwrap();
        (VqaModel::new(cfg, vocab, space, None, 0, &mut seeded(0)).unwrap(), data)
    }

    #[test]
    fn learns_a_trivial_mapping_and_is_deterministic() {
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 2,
            optimizer: OptimizerKind::Adam {
                lr: 0.05,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            ..TrainConfig::default()
        };
        let (mut a, data) = tiny();
        let log_a = train(&mut a, &data, &data[4..], None, &cfg, &mut seeded(1)).unwrap();
        assert_eq!(evaluate_accuracy(&a, &data, None).unwrap(), 1.0);
        let (mut b, _) = tiny();
        let log_b = train(&mut b, &data, &data[4..], None, &cfg, &mut seeded(1)).unwrap();
        assert_eq!(log_a, log_b);
        assert_eq!(a, b);
        assert!(log_a.best_epoch >= 1 && log_a.best_epoch <= 30);
    }

    #[test]
    fn zero_epochs_is_an_error() {
        let (mut m, data) = tiny();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(train(&mut m, &data, &[], None, &cfg, &mut seeded(0)).is_err());
    }

    #[test]
    fn divergence_aborts() {
        let (mut m, data) = tiny();
        m.params.get_mut(m.embedding.weights).data_mut()[4] = 1e308;
        let cfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        let err = train(&mut m, &data, &[], None, &cfg, &mut seeded(0)).unwrap_err();
        assert_eq!(err, Error::Diverged { epoch: 1 });
    }
}

use ayn_core::data::split_validation;
use ayn_core::encoders::{Aggregation, ConvActivation, EmbeddingMode};
use ayn_core::init::seeded;
use ayn_core::model::{build_vocabularies, DecoderKind, EncoderKind, VqaModel};
use ayn_core::optim::OptimizerKind;
use ayn_core::train::train as fit;
use log::info;

use crate::checkpoint::Checkpoint;
use crate::cli::{DecoderArg, EncoderArg, TrainArgs};
use crate::config::RunConfig;
use crate::error::{AynError, Result};
use crate::io::{load_embeddings, load_features, load_qa, write_text};

/// Applies command-line overrides on top of the file configuration.
pub fn resolve_config(args: &TrainArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = args.epochs {
        cfg.train.epochs = e;
    }
    if let Some(b) = args.batch_size {
        cfg.train.batch_size = b;
    }
    if let Some(lr) = args.lr {
        match &mut cfg.train.optimizer {
            OptimizerKind::Adam { lr: l, .. } | OptimizerKind::SgdMomentum { lr: l, .. } => *l = lr,
        }
    }
    if let Some(e) = args.encoder {
        cfg.model.encoder = match e {
            EncoderArg::Bow => EncoderKind::Bow,
            EncoderArg::Cnn => match cfg.model.encoder {
                c @ EncoderKind::Cnn { .. } => c,
                _ => EncoderKind::Cnn {
                    views: 3,
                    feature_maps: cfg.model.hidden_dim,
                    activation: ConvActivation::Tanh,
                    aggregation: Aggregation::SumPool,
                },
            },
            EncoderArg::Lstm => EncoderKind::Lstm,
            EncoderArg::Gru => EncoderKind::Gru,
        };
    }
    if let Some(f) = args.fusion {
        cfg.model.fusion = f.into();
    }
    if let Some(d) = args.decoder {
        cfg.model.decoder = match d {
            DecoderArg::Classify => DecoderKind::Classify,
            DecoderArg::Generate => DecoderKind::Generate,
        };
    }
    if let Some(k) = args.top_k {
        cfg.model.top_k = k;
    }
    if let Some(d) = args.embed_dim {
        cfg.model.embed_dim = d;
    }
    if let Some(d) = args.hidden_dim {
        cfg.model.hidden_dim = d;
    }
    if let Some(v) = args.validation_fraction {
        cfg.validation_fraction = v;
    }
    if args.question_only {
        cfg.model.use_visual = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let cfg = resolve_config(args)?;
    let data = load_qa(&args.train, args.train_format)?;
    let features = match (&args.features, cfg.model.use_visual) {
        (Some(p), true) => Some(load_features(p, args.features_format)?),
        (None, true) => return Err(AynError::MissingResource("image features (--features)")),
        (_, false) => None,
    };
    let pretrained = match (cfg.model.embedding_mode, &args.embeddings) {
        (EmbeddingMode::Learned, _) => None,
        (_, Some(p)) => Some(load_embeddings(p)?),
        (_, None) => return Err(AynError::MissingResource("pretrained word vectors (--embeddings)")),
    };
    let (train_set, validation) = if cfg.validation_fraction > 0.0 && data.len() > 1 {
        split_validation(data, cfg.validation_fraction)?
    } else {
        (data, Vec::new())
    };
    info!(
        "training on {} instances, validating on {}",
        train_set.len(),
        validation.len()
    );

    let mut rng = seeded(cfg.seed);
    let (vocab, space) = build_vocabularies(&cfg.model, &train_set)?;
    let visual_dim = features.as_ref().map_or(0, |f| f.dim());
    let mut model = VqaModel::new(
        cfg.model.clone(),
        vocab,
        space,
        pretrained.as_ref(),
        visual_dim,
        &mut rng,
    )?;
    let log = fit(
        &mut model,
        &train_set,
        &validation,
        features.as_ref(),
        &cfg.train,
        &mut rng,
    )?;
    if log.skipped_missing_features > 0 {
        log::warn!(
            "{} training instances had no image features",
            log.skipped_missing_features
        );
    }
    info!("best epoch {}", log.best_epoch);
    if let Some(p) = &args.log {
        write_text(p, &serde_json::to_string_pretty(&log).expect("log serializes"))?;
    }
    Checkpoint::new(cfg, model, log).save(&args.out)
}

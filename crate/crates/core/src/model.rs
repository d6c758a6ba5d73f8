//! Full question answering models: embedding, question encoder, fusion and
//! either a classifier head or a shared-LSTM answer generator.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{AnswerSet, QaInstance};
use crate::decoders::{
    classify_logits, training_targets, AnswerGenerator, AnswerVocabulary, ClassifierHead, GenerationConfig,
    GenerationVocabulary,
};
use crate::encoders::{
    Aggregation, ConvActivation, EmbeddingMode, EmbeddingTable, GruCell, LstmCell, PretrainedEmbeddings,
    QuestionEncoder, TextCnn, Vocabulary,
};
use crate::error::{Error, Result};
use crate::fusion::{Fusion, FusionMode};
use crate::tape::{Tape, Var};
use crate::tensor::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncoderKind {
    Bow,
    Cnn {
        views: usize,
        feature_maps: usize,
        activation: ConvActivation,
        aggregation: Aggregation,
    },
    Lstm,
    Gru,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Classify,
    Generate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder: EncoderKind,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub embedding_mode: EmbeddingMode,
    pub fusion: FusionMode,
    pub normalize_visual: bool,
    /// `false` gives the question-only model.
    pub use_visual: bool,
    pub decoder: DecoderKind,
    /// Number of answer classes kept for the classifier.
    pub top_k: usize,
    pub generation: GenerationConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderKind::Lstm,
            embed_dim: 300,
            hidden_dim: 500,
            embedding_mode: EmbeddingMode::Learned,
            fusion: FusionMode::Sum,
            normalize_visual: true,
            use_visual: true,
            decoder: DecoderKind::Classify,
            top_k: 2000,
            generation: GenerationConfig::default(),
        }
    }
}

/// Answer space derived from training data.
#[derive(Debug, Clone, PartialEq)]
pub enum AnswerSpace {
    Classes(AnswerVocabulary),
    Words(GenerationVocabulary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Head {
    Classifier {
        encoder: QuestionEncoder,
        /// Absent in the question-only model.
        fusion: Option<Fusion>,
        classifier: ClassifierHead,
        classes: AnswerVocabulary,
    },
    Generator(AnswerGenerator),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqaModel {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub embedding: EmbeddingTable,
    /// Expected length of Φ(x); 0 when the model ignores the image.
    pub visual_dim: usize,
    pub head: Head,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub answer: AnswerSet,
    /// Class distribution (classifier only).
    pub probabilities: Option<Vec<f64>>,
    /// Generation stopped at `max_length` (generator only).
    pub truncated: bool,
}

/// Question vocabulary and answer space read off the training instances.
/// Generation models also embed answer words, so they join the vocabulary.
pub fn build_vocabularies(config: &ModelConfig, train: &[QaInstance]) -> Result<(Vocabulary, AnswerSpace)> {
    if train.is_empty() {
        return Err(Error::Empty("training instances"));
    }
    let mut vocab = Vocabulary::from_tokens(train.iter().map(|i| &i.question));
    let space = match config.decoder {
        DecoderKind::Classify => {
            let labels: Vec<String> = train
                .iter()
                .flat_map(|i| i.answers.iter().map(AnswerSet::canonical))
                .collect();
            AnswerSpace::Classes(crate::data::build_answer_classes(
                labels.iter().map(String::as_str),
                config.top_k,
            )?)
        }
        DecoderKind::Generate => {
            let words: Vec<String> = train
                .iter()
                .flat_map(|i| i.answers.iter().flat_map(AnswerSet::tokens))
                .collect();
            for w in &words {
                vocab.insert(w);
            }
            AnswerSpace::Words(GenerationVocabulary::from_words(words.iter().map(String::as_str))?)
        }
    };
    Ok((vocab, space))
}

impl VqaModel {
    pub fn new<R: Rng + ?Sized>(
        config: ModelConfig,
        vocab: Vocabulary,
        answers: AnswerSpace,
        pretrained: Option<&PretrainedEmbeddings>,
        visual_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if config.use_visual && visual_dim == 0 {
            return Err(Error::precondition("a visual model needs a positive feature dimension"));
        }
        let visual_dim = if config.use_visual { visual_dim } else { 0 };
        let mut params = ParamStore::new();
        let embedding = match (config.embedding_mode, pretrained) {
            (EmbeddingMode::Learned, _) => EmbeddingTable::learned(&mut params, vocab, config.embed_dim, rng)?,
            (mode, Some(pre)) => {
                if pre.dim() != config.embed_dim {
                    return Err(Error::shape("pretrained embeddings", &[config.embed_dim], &[pre.dim()]));
                }
                EmbeddingTable::pretrained(&mut params, vocab, pre, mode, rng)?
            }
            (_, None) => return Err(Error::precondition("pretrained embedding mode needs an embedding file")),
        };
        let d = config.embed_dim;
        let head = match (config.decoder, answers) {
            (DecoderKind::Classify, AnswerSpace::Classes(classes)) => {
                let encoder = match config.encoder {
                    EncoderKind::Bow => QuestionEncoder::Bow { dim: d },
                    EncoderKind::Cnn {
                        views,
                        feature_maps,
                        activation,
                        aggregation,
                    } => QuestionEncoder::Cnn(TextCnn::new(
                        &mut params,
                        d,
                        views,
                        feature_maps,
                        activation,
                        aggregation,
                        rng,
                    )?),
                    EncoderKind::Lstm => {
                        QuestionEncoder::Lstm(LstmCell::new(&mut params, "lstm", d, config.hidden_dim, rng)?)
                    }
                    EncoderKind::Gru => {
                        QuestionEncoder::Gru(GruCell::new(&mut params, "gru", d, config.hidden_dim, rng)?)
                    }
                };
                let q_dim = encoder.output_dim();
                let fusion = if config.use_visual {
                    Some(Fusion::new(
                        &mut params,
                        config.fusion,
                        q_dim,
                        visual_dim,
                        config.normalize_visual,
                        rng,
                    )?)
                } else {
                    None
                };
                let fused_dim = fusion.as_ref().map_or(q_dim, Fusion::output_dim);
                let classifier = ClassifierHead::new(&mut params, fused_dim, classes.len(), rng)?;
                Head::Classifier {
                    encoder,
                    fusion,
                    classifier,
                    classes,
                }
            }
            (DecoderKind::Generate, AnswerSpace::Words(words)) => {
                if config.encoder != EncoderKind::Lstm {
                    return Err(Error::precondition("answer generation shares an LSTM encoder"));
                }
                Head::Generator(AnswerGenerator::new(
                    &mut params,
                    words,
                    d,
                    visual_dim,
                    config.hidden_dim,
                    rng,
                )?)
            }
            _ => return Err(Error::precondition("answer space does not match the decoder kind")),
        };
        Ok(Self {
            config,
            params,
            embedding,
            visual_dim,
            head,
        })
    }

    pub fn uses_visual(&self) -> bool {
        self.visual_dim > 0
    }

    fn visual_input(&self, tape: &mut Tape<'_>, visual: Option<&[f64]>) -> Result<Option<Var>> {
        if !self.uses_visual() {
            return Ok(None);
        }
        let v = visual.ok_or(Error::Empty("visual features"))?;
        if v.len() != self.visual_dim {
            return Err(Error::shape("visual features", &[self.visual_dim], &[v.len()]));
        }
        tape.input(v.to_vec()).map(Some)
    }

    /// Whether `answer` can be a training target; out-of-class answers are
    /// dropped from the loss.
    pub fn can_learn(&self, answer: &AnswerSet) -> bool {
        match &self.head {
            Head::Classifier { classes, .. } => classes.get(&answer.canonical()).is_some(),
            Head::Generator(g) => !answer.is_empty() && answer.tokens().iter().all(|w| g.vocab.get(w).is_some()),
        }
    }

    /// Loss for one (question, image, answer) triple, or `None` when the
    /// answer lies outside the model's answer space.
    pub fn loss(
        &self,
        tape: &mut Tape<'_>,
        question: &[String],
        visual: Option<&[f64]>,
        answer: &AnswerSet,
    ) -> Result<Option<Var>> {
        if !self.can_learn(answer) {
            return Ok(None);
        }
        let v = self.visual_input(tape, visual)?;
        match &self.head {
            Head::Classifier {
                encoder,
                fusion,
                classifier,
                classes,
            } => {
                let target = classes.get(&answer.canonical()).expect("checked by can_learn");
                let logits = self.classifier_logits(tape, encoder, fusion.as_ref(), classifier, question, v)?;
                tape.cross_entropy(logits, target).map(Some)
            }
            Head::Generator(g) => {
                let seq = training_targets(question, &answer.tokens())?;
                g.sequence_loss(tape, &self.embedding, v, &seq).map(Some)
            }
        }
    }

    fn classifier_logits(
        &self,
        tape: &mut Tape<'_>,
        encoder: &QuestionEncoder,
        fusion: Option<&Fusion>,
        classifier: &ClassifierHead,
        question: &[String],
        visual: Option<Var>,
    ) -> Result<Var> {
        let embedded = self.embedding.embed(tape, question)?;
        let psi = encoder.encode(tape, &embedded)?;
        let fused = match (fusion, visual) {
            (Some(f), Some(v)) => f.fuse(tape, psi, v)?,
            (None, _) => psi,
            (Some(_), None) => return Err(Error::Empty("visual features")),
        };
        classifier.logits(tape, fused)
    }

    pub fn predict(&self, question: &[String], visual: Option<&[f64]>) -> Result<Prediction> {
        match &self.head {
            Head::Classifier {
                encoder,
                fusion,
                classifier,
                classes,
            } => {
                let mut tape = Tape::new(&self.params);
                let v = self.visual_input(&mut tape, visual)?;
                let logits = self.classifier_logits(&mut tape, encoder, fusion.as_ref(), classifier, question, v)?;
                let (best, probs) = classify_logits(tape.value(logits))?;
                let label = classes.entry(best).ok_or(Error::IndexOutOfRange {
                    index: best,
                    len: classes.len(),
                })?;
                Ok(Prediction {
                    answer: AnswerSet::parse(label),
                    probabilities: Some(probs),
                    truncated: false,
                })
            }
            Head::Generator(g) => {
                if self.uses_visual() {
                    let v = visual.ok_or(Error::Empty("visual features"))?;
                    if v.len() != self.visual_dim {
                        return Err(Error::shape("visual features", &[self.visual_dim], &[v.len()]));
                    }
                }
                let visual = if self.uses_visual() { visual } else { None };
                let out = g.generate(&self.params, &self.embedding, question, visual, &self.config.generation)?;
                Ok(Prediction {
                    answer: AnswerSet::from_words(&out.words),
                    probabilities: None,
                    truncated: out.truncated,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::seeded;
    use alloc::vec;

    fn inst(id: &str, q: &str, a: &str) -> QaInstance {
        QaInstance::new(
            id,
            id,
            crate::data::preprocess_question(q).unwrap(),
            vec![AnswerSet::parse(a)],
        )
        .unwrap()
    }

    fn tiny_config(decoder: DecoderKind) -> ModelConfig {
        ModelConfig {
            embed_dim: 4,
            hidden_dim: 5,
            decoder,
            top_k: 10,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn classifier_predicts_a_known_class() {
        let train = [inst("1", "what color", "red"), inst("2", "what shape", "cube")];
        let cfg = tiny_config(DecoderKind::Classify);
        let (vocab, space) = build_vocabularies(&cfg, &train).unwrap();
        let model = VqaModel::new(cfg, vocab, space, None, 3, &mut seeded(0)).unwrap();
        let p = model.predict(&train[0].question, Some(&[1.0, 0.0, 0.0])).unwrap();
        assert!(["red", "cube"].contains(&p.answer.canonical().as_str()));
        assert!(model.predict(&train[0].question, Some(&[1.0])).is_err());
        assert!(model.predict(&train[0].question, None).is_err());
    }

    #[test]
    fn out_of_class_answers_have_no_loss() {
        let train = [inst("1", "q a", "x"), inst("2", "q b", "x"), inst("3", "q c", "y")];
        let cfg = ModelConfig {
            top_k: 1,
            ..tiny_config(DecoderKind::Classify)
        };
        let (vocab, space) = build_vocabularies(&cfg, &train).unwrap();
        let model = VqaModel::new(cfg, vocab, space, None, 2, &mut seeded(0)).unwrap();
        let mut tape = Tape::new(&model.params);
        let q = &train[2].question;
        assert!(model
            .loss(&mut tape, q, Some(&[0.0, 1.0]), &AnswerSet::parse("y"))
            .unwrap()
            .is_none());
        assert!(model
            .loss(&mut tape, q, Some(&[0.0, 1.0]), &AnswerSet::parse("x"))
            .unwrap()
            .is_some());
    }

    #[test]
    fn one_class_vocabulary_is_constant() {
        let train = [inst("1", "what", "two")];
        let cfg = ModelConfig {
            use_visual: false,
            ..tiny_config(DecoderKind::Classify)
        };
        let (vocab, space) = build_vocabularies(&cfg, &train).unwrap();
        let model = VqaModel::new(cfg, vocab, space, None, 0, &mut seeded(0)).unwrap();
        let p = model.predict(&["anything".into()], None).unwrap();
        assert_eq!(p.answer.canonical(), "two");
        assert_eq!(p.probabilities, Some(vec![1.0]));
    }

    #[test]
    fn generator_requires_lstm_and_terminates() {
        let train = [inst("1", "what is in the image", "red, cube")];
        let cfg = tiny_config(DecoderKind::Generate);
        let (vocab, space) = build_vocabularies(&cfg, &train).unwrap();
        assert!(vocab.get("cube").is_some());
        let model = VqaModel::new(cfg.clone(), vocab.clone(), space.clone(), None, 2, &mut seeded(0)).unwrap();
        let p = model.predict(&train[0].question, Some(&[0.5, 0.5])).unwrap();
        assert!(p.answer.len() <= cfg.generation.max_length);
        assert!(!p.answer.contains(crate::decoders::END_TOKEN));

        let gru = ModelConfig {
            encoder: EncoderKind::Gru,
            ..cfg
        };
        assert!(VqaModel::new(gru, vocab, space, None, 2, &mut seeded(0)).is_err());
    }
}

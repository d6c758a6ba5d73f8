//! Answer decoders: a softmax over answer classes, or word-by-word generation
//! with an LSTM that shares its parameters with the question encoder.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoders::{EmbeddingTable, LstmCell, LstmState};
use crate::error::{Error, Result};
use crate::init::{glorot_uniform, zeros_vector};
use crate::math;
use crate::tape::{Tape, Var};
use crate::tensor::{ParamId, ParamStore};

/// End-of-answer token.
pub const END_TOKEN: &str = "$";

/// Ordered, duplicate-free list of answer strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct AnswerVocabulary {
    entries: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl TryFrom<Vec<String>> for AnswerVocabulary {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AnswerVocabulary> for Vec<String> {
    fn from(v: AnswerVocabulary) -> Self {
        v.entries
    }
}

impl AnswerVocabulary {
    pub fn new(entries: Vec<String>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("answer vocabulary"));
        }
        let mut index = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.clone(), i).is_some() {
                return Err(Error::precondition(alloc::format!("duplicate answer class {e:?}")));
            }
        }
        Ok(Self { entries, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, answer: &str) -> Option<usize> {
        self.index.get(answer).copied()
    }

    pub fn entry(&self, i: usize) -> Option<&str> {
        self.entries.get(i).map(String::as_str)
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }
}

/// Output words for generation; index 0 is always [`END_TOKEN`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct GenerationVocabulary(AnswerVocabulary);

impl TryFrom<Vec<String>> for GenerationVocabulary {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        if v.first().map(String::as_str) != Some(END_TOKEN) {
            return Err(Error::precondition(
                "generation vocabulary must start with the end token",
            ));
        }
        Ok(Self(AnswerVocabulary::new(v)?))
    }
}

impl From<GenerationVocabulary> for Vec<String> {
    fn from(v: GenerationVocabulary) -> Self {
        v.0.into()
    }
}

impl GenerationVocabulary {
    /// `{$} ∪ words`, with `$` first and the remaining words in first-seen order.
    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut entries = vec![END_TOKEN.to_string()];
        for w in words {
            if w == END_TOKEN {
                return Err(Error::precondition("answer words may not contain the end token"));
            }
            if !entries.iter().any(|e| e == w) {
                entries.push(w.to_string());
            }
        }
        Ok(Self(AnswerVocabulary::new(entries)?))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.0.get(word)
    }

    pub fn word(&self, i: usize) -> Option<&str> {
        self.0.entry(i)
    }

    pub fn words(&self) -> &[String] {
        self.0.entries()
    }
}

/// Softmax layer `W · C + b` over answer classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierHead {
    pub weights: ParamId,
    pub bias: ParamId,
    pub input_dim: usize,
    pub num_classes: usize,
}

impl ClassifierHead {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        input_dim: usize,
        num_classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || num_classes == 0 {
            return Err(Error::precondition("classifier dimensions must be positive"));
        }
        Ok(Self {
            weights: store.add("classifier.weights", glorot_uniform(rng, num_classes, input_dim)),
            bias: store.add("classifier.bias", zeros_vector(num_classes)),
            input_dim,
            num_classes,
        })
    }

    pub fn logits(&self, tape: &mut Tape<'_>, fused: Var) -> Result<Var> {
        let w = tape.param(self.weights);
        let b = tape.param(self.bias);
        tape.linear(w, fused, b)
    }

    /// Argmax class and the full softmax distribution for a fused vector.
    pub fn classify(&self, store: &ParamStore, fused: &[f64]) -> Result<(usize, Vec<f64>)> {
        let mut tape = Tape::new(store);
        let x = tape.input(fused.to_vec())?;
        let logits = self.logits(&mut tape, x)?;
        classify_logits(tape.value(logits))
    }
}

/// Argmax (lowest index on ties) and softmax of a logit vector.
pub fn classify_logits(logits: &[f64]) -> Result<(usize, Vec<f64>)> {
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("classify_answer"));
    }
    let probs = math::softmax(logits);
    let best = math::argmax(&probs).ok_or(Error::Empty("logits"))?;
    Ok((best, probs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub max_length: usize,
    /// Exclude already emitted words from later argmax steps.
    pub dedup: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            max_length: 10,
            dedup: true,
        }
    }
}

/// Training sequence `[q, a, $]` and the per-position loss mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSequence {
    pub tokens: Vec<String>,
    /// 0 up to and including the last question token, 1 afterwards.
    pub mask: Vec<u8>,
}

pub fn training_targets(question: &[String], answer: &[String]) -> Result<TrainingSequence> {
    if question.is_empty() {
        return Err(Error::Empty("question"));
    }
    if answer.is_empty() {
        return Err(Error::Empty("answer"));
    }
    let mut tokens = question.to_vec();
    tokens.extend(answer.iter().cloned());
    tokens.push(END_TOKEN.to_string());
    let mut mask = vec![0u8; question.len()];
    mask.resize(tokens.len(), 1);
    Ok(TrainingSequence { tokens, mask })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub words: Vec<String>,
    /// `max_length` words were emitted without producing the end token.
    pub truncated: bool,
}

/// LSTM that reads `[Φ(x), embedding(word)]` at every step, first over the
/// question and then over its own previous outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerGenerator {
    pub cell: LstmCell,
    pub output_weights: ParamId,
    pub output_bias: ParamId,
    pub vocab: GenerationVocabulary,
    /// 0 for the question-only variant.
    pub visual_dim: usize,
}

impl AnswerGenerator {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        vocab: GenerationVocabulary,
        embed_dim: usize,
        visual_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let cell = LstmCell::new(store, "lstm", visual_dim + embed_dim, hidden_dim, rng)?;
        let output_weights = store.add("generator.output_weights", glorot_uniform(rng, vocab.len(), hidden_dim));
        let output_bias = store.add("generator.output_bias", zeros_vector(vocab.len()));
        Ok(Self {
            cell,
            output_weights,
            output_bias,
            vocab,
            visual_dim,
        })
    }

    fn step_input(&self, tape: &mut Tape<'_>, visual: Option<Var>, word: Var) -> Result<Var> {
        match visual {
            Some(v) => tape.concat(&[v, word]),
            None => Ok(word),
        }
    }

    fn logits(&self, tape: &mut Tape<'_>, h: Var) -> Result<Var> {
        let w = tape.param(self.output_weights);
        let b = tape.param(self.output_bias);
        tape.linear(w, h, b)
    }

    fn check_visual(&self, tape: &Tape<'_>, visual: Option<Var>) -> Result<()> {
        match (visual, self.visual_dim) {
            (None, 0) => Ok(()),
            (Some(v), d) if tape.shape(v) == [d] => Ok(()),
            (Some(v), d) => Err(Error::shape("generator visual input", &[d], tape.shape(v))),
            (None, d) => Err(Error::shape("generator visual input", &[d], &[0])),
        }
    }

    /// Summed cross-entropy over the masked positions of `seq`; the output
    /// after reading token `t` predicts token `t + 1`.
    pub fn sequence_loss(
        &self,
        tape: &mut Tape<'_>,
        embedding: &EmbeddingTable,
        visual: Option<Var>,
        seq: &TrainingSequence,
    ) -> Result<Var> {
        self.check_visual(tape, visual)?;
        let mut state = self.cell.zero_state(tape)?;
        let mut losses = Vec::new();
        for t in 0..seq.tokens.len() - 1 {
            let word = embedding.embed_index(tape, embedding.vocab.lookup(&seq.tokens[t]))?;
            let x = self.step_input(tape, visual, word)?;
            state = self.cell.step(tape, x, state)?;
            if seq.mask[t + 1] == 1 {
                let target = self.vocab.get(&seq.tokens[t + 1]).ok_or_else(|| {
                    Error::precondition(alloc::format!(
                        "answer word {:?} not in output vocabulary",
                        seq.tokens[t + 1]
                    ))
                })?;
                let logits = self.logits(tape, state.h)?;
                losses.push(tape.cross_entropy(logits, target)?);
            }
        }
        let total = tape.concat(&losses)?;
        tape.sum_all(total)
    }

    /// Greedy decoding after consuming `question`.
    pub fn generate(
        &self,
        store: &ParamStore,
        embedding: &EmbeddingTable,
        question: &[String],
        visual: Option<&[f64]>,
        config: &GenerationConfig,
    ) -> Result<Generated> {
        if config.max_length == 0 {
            return Err(Error::precondition("max_length must be at least 1"));
        }
        if question.is_empty() {
            return Err(Error::Empty("question"));
        }
        let mut tape = Tape::new(store);
        let visual = visual.map(|v| tape.input(v.to_vec())).transpose()?;
        self.check_visual(&tape, visual)?;

        let mut state: LstmState = self.cell.zero_state(&mut tape)?;
        for tok in question {
            let word = embedding.embed_index(&mut tape, embedding.vocab.lookup(tok))?;
            let x = self.step_input(&mut tape, visual, word)?;
            state = self.cell.step(&mut tape, x, state)?;
        }

        let mut emitted: Vec<usize> = Vec::new();
        loop {
            let logits = self.logits(&mut tape, state.h)?;
            let mut scores = tape.value(logits).to_vec();
            if config.dedup {
                for &i in &emitted {
                    scores[i] = f64::NEG_INFINITY;
                }
            }
            let best = math::argmax(&scores).ok_or(Error::Empty("output vocabulary"))?;
            if best == 0 {
                break;
            }
            emitted.push(best);
            if emitted.len() == config.max_length {
                return Ok(self.finish(&emitted, true));
            }
            let word_text = self.vocab.word(best).unwrap_or_default();
            let word = embedding.embed_index(&mut tape, embedding.vocab.lookup(word_text))?;
            let x = self.step_input(&mut tape, visual, word)?;
            state = self.cell.step(&mut tape, x, state)?;
        }
        Ok(self.finish(&emitted, false))
    }

    fn finish(&self, emitted: &[usize], truncated: bool) -> Generated {
        Generated {
            words: emitted
                .iter()
                .filter_map(|&i| self.vocab.word(i))
                .map(String::from)
                .collect(),
            truncated,
        }
    }
}

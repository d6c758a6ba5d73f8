//! In-memory dataset types and preparation steps: question preprocessing,
//! answer normalization, answer-class truncation, training-answer selection
//! and the tail validation split.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decoders::AnswerVocabulary;
use crate::error::{Error, Result};

/// Normalized answer: a sorted set of lowercase answer words (an element may
/// itself contain spaces, e.g. `"bed sheets"`).
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AnswerSet(Vec<String>);

fn strip_trailing_punctuation(s: &str) -> &str {
    s.trim_end_matches(|c: char| c.is_ascii_punctuation()).trim_end()
}

impl AnswerSet {
    /// Lowercases, splits on commas, trims whitespace and trailing punctuation.
    /// Empty elements are dropped, so the result may be empty.
    pub fn parse(raw: &str) -> Self {
        let set: BTreeSet<String> = raw
            .split(',')
            .map(|part| strip_trailing_punctuation(part.trim()).to_lowercase())
            .filter(|s| !s.is_empty())
            .collect();
        Self(set.into_iter().collect())
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let joined: Vec<String> = words.into_iter().map(|w| w.as_ref().to_string()).collect();
        Self::parse(&joined.join(","))
    }

    pub fn words(&self) -> &[String] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.binary_search_by(|w| w.as_str().cmp(word)).is_ok()
    }

    /// Elements joined with `", "`; the class label used by classifiers.
    pub fn canonical(&self) -> String {
        self.0.join(", ")
    }

    /// Whitespace tokens of every element, in set order (generation targets).
    pub fn tokens(&self) -> Vec<String> {
        self.0
            .iter()
            .flat_map(|e| e.split_whitespace().map(String::from))
            .collect()
    }
}

impl core::fmt::Display for AnswerSet {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// One question about one image with `K ≥ 1` reference answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaInstance {
    pub id: String,
    pub image: String,
    pub question: Vec<String>,
    pub answers: Vec<AnswerSet>,
    /// Per-answer "confidently answered" flags, when the source provides them.
    pub confident: Option<Vec<bool>>,
}

impl QaInstance {
    pub fn new(
        id: impl Into<String>,
        image: impl Into<String>,
        question: Vec<String>,
        answers: Vec<AnswerSet>,
    ) -> Result<Self> {
        let inst = Self {
            id: id.into(),
            image: image.into(),
            question,
            answers,
            confident: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.question.is_empty() {
            return Err(Error::Empty("question tokens"));
        }
        if self.answers.is_empty() {
            return Err(Error::Empty("reference answers"));
        }
        if self.answers.iter().any(AnswerSet::is_empty) {
            return Err(Error::Empty("reference answer set"));
        }
        if let Some(c) = &self.confident {
            if c.len() != self.answers.len() {
                return Err(Error::shape("confident flags", &[self.answers.len()], &[c.len()]));
            }
        }
        Ok(())
    }
}

/// Lowercase, drop `?`, split on whitespace and strip punctuation from token
/// edges.
pub fn preprocess_question(raw: &str) -> Result<Vec<String>> {
    let lowered = raw.to_lowercase().replace('?', " ");
    let tokens: Vec<String> = lowered
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation()))
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect();
    if tokens.is_empty() {
        return Err(Error::Empty("question after preprocessing"));
    }
    Ok(tokens)
}

/// Precomputed image features Φ(x), keyed by image id.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualFeatureStore {
    dim: usize,
    features: BTreeMap<String, Vec<f64>>,
}

impl VisualFeatureStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::precondition("feature dimension must be positive"));
        }
        Ok(Self {
            dim,
            features: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, image: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::shape("visual feature", &[self.dim], &[vector.len()]));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("visual feature"));
        }
        self.features.insert(image.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, image: &str) -> Option<&[f64]> {
        self.features.get(image).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Entries in ascending image-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.features.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// Most frequent item; ties go to the lexicographically smallest.
pub fn most_frequent<'a>(items: impl IntoIterator<Item = &'a str>) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for it in items {
        *counts.entry(it).or_default() += 1;
    }
    // BTreeMap iterates in ascending key order, so strict > keeps the smallest.
    let mut best: Option<(&str, usize)> = None;
    for (k, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((k, c));
        }
    }
    best.map(|(k, _)| k.to_string())
}

/// The `top_k` most frequent answers, by descending count then ascending text.
pub fn build_answer_classes<'a>(answers: impl IntoIterator<Item = &'a str>, top_k: usize) -> Result<AnswerVocabulary> {
    if top_k == 0 {
        return Err(Error::precondition("top_k must be at least 1"));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for a in answers {
        *counts.entry(a).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    AnswerVocabulary::new(ranked.into_iter().take(top_k).map(|(a, _)| a.to_string()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerStrategy {
    Random,
    ConfidentRandom,
    All,
    MostFrequent,
}

/// Training target(s) for an instance with `K` reference answers, each with a
/// loss weight. `All` yields `K` targets of weight `1/K`.
pub fn select_training_answer<R: Rng + ?Sized>(
    instance: &QaInstance,
    strategy: AnswerStrategy,
    rng: &mut R,
) -> Result<Vec<(AnswerSet, f64)>> {
    let k = instance.answers.len();
    if k == 0 {
        return Err(Error::Empty("reference answers"));
    }
    let pick = |i: usize| alloc::vec![(instance.answers[i].clone(), 1.0)];
    Ok(match strategy {
        AnswerStrategy::Random => pick(rng.random_range(0..k)),
        AnswerStrategy::ConfidentRandom => {
            let confident: Vec<usize> = match &instance.confident {
                Some(flags) => (0..k).filter(|&i| flags.get(i).copied().unwrap_or(false)).collect(),
                None => Vec::new(),
            };
            if confident.is_empty() {
                pick(rng.random_range(0..k))
            } else {
                pick(confident[rng.random_range(0..confident.len())])
            }
        }
        AnswerStrategy::All => {
            let w = 1.0 / k as f64;
            instance.answers.iter().map(|a| (a.clone(), w)).collect()
        }
        AnswerStrategy::MostFrequent => {
            let labels: Vec<String> = instance.answers.iter().map(AnswerSet::canonical).collect();
            let mode = most_frequent(labels.iter().map(String::as_str)).expect("k ≥ 1");
            let i = labels.iter().position(|l| *l == mode).expect("mode is a label");
            pick(i)
        }
    })
}

/// The last `⌈fraction · N⌉` items (in input order) become the validation set.
pub fn split_validation<T>(mut items: Vec<T>, fraction: f64) -> Result<(Vec<T>, Vec<T>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::precondition("validation fraction must lie in (0, 1)"));
    }
    let n_val = libm::ceil(fraction * items.len() as f64) as usize;
    let validation = items.split_off(items.len() - n_val.min(items.len()));
    Ok((items, validation))
}

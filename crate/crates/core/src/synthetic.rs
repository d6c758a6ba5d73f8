//! Toy world of colored shapes with synthetic image features and templated
//! questions. Some question families need the image, one is answerable from
//! the wording alone, and a two-word family exercises answer generation.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{AnswerSet, QaInstance, VisualFeatureStore};
use crate::error::{Error, Result};
use crate::init::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuestionFamily {
    /// "what color is the <shape>"
    Color,
    /// "what shape is the <color> object"
    Shape,
    /// "how many <shape>s are there"
    Count,
    /// "what color is the sky": answer fixed by the wording.
    Bias,
    /// "what is in the image": answer is `{color, shape}`.
    Describe,
}

impl QuestionFamily {
    pub fn is_vision_dependent(self) -> bool {
        !matches!(self, QuestionFamily::Bias)
    }

    pub fn name(self) -> &'static str {
        match self {
            QuestionFamily::Color => "color",
            QuestionFamily::Shape => "shape",
            QuestionFamily::Count => "count",
            QuestionFamily::Bias => "bias",
            QuestionFamily::Describe => "describe",
        }
    }
}

pub const BIAS_QUESTION: &str = "what color is the sky";
pub const BIAS_ANSWER: &str = "blue";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyWorldSpec {
    pub seed: u64,
    pub num_train: usize,
    pub num_test: usize,
    pub colors: Vec<String>,
    pub shapes: Vec<String>,
    /// Objects per image range over `1..=max_count`.
    pub max_count: usize,
    /// Standard deviation of the Gaussian feature noise.
    pub noise: f64,
    /// Question families drawn uniformly per instance.
    pub families: Vec<QuestionFamily>,
}

impl Default for ToyWorldSpec {
    fn default() -> Self {
        let words = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        Self {
            seed: 0,
            num_train: 2000,
            num_test: 500,
            colors: words(&["red", "green", "blue", "yellow", "purple", "orange", "white", "black"]),
            shapes: words(&["cube", "sphere", "cone", "cylinder"]),
            max_count: 3,
            noise: 0.1,
            families: vec![
                QuestionFamily::Color,
                QuestionFamily::Shape,
                QuestionFamily::Count,
                QuestionFamily::Bias,
            ],
        }
    }
}

impl ToyWorldSpec {
    /// The two-word answer task used to exercise generation.
    pub fn describe_task() -> Self {
        Self {
            families: vec![QuestionFamily::Describe],
            ..Self::default()
        }
    }

    /// Feature layout: one-hot color, one-hot shape, one-hot count.
    pub fn feature_dim(&self) -> usize {
        self.colors.len() + self.shapes.len() + self.max_count
    }

    fn validate(&self) -> Result<()> {
        if self.colors.len() * self.shapes.len() < 4 {
            return Err(Error::precondition("toy world needs colors × shapes ≥ 4"));
        }
        if self.max_count == 0 || self.num_train == 0 || self.num_test == 0 || self.families.is_empty() {
            return Err(Error::precondition(
                "toy world needs counts, instances and question families",
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::precondition("noise must be finite and non-negative"));
        }
        let mut all: Vec<&String> = self.colors.iter().chain(&self.shapes).collect();
        all.sort();
        all.dedup();
        if all.len() != self.colors.len() + self.shapes.len() || all.iter().any(|w| w.is_empty() || w.contains(' ')) {
            return Err(Error::precondition("colors and shapes must be distinct single words"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyImage {
    pub color: usize,
    pub shape: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerKeyEntry {
    pub id: String,
    pub family: QuestionFamily,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub train: Vec<QaInstance>,
    pub test: Vec<QaInstance>,
    pub features: VisualFeatureStore,
    pub images: Vec<(String, ToyImage)>,
    /// One entry per train and test instance, in corpus order.
    pub key: Vec<AnswerKeyEntry>,
}

impl SyntheticCorpus {
    pub fn family_of(&self, id: &str) -> Option<QuestionFamily> {
        self.key.iter().find(|k| k.id == id).map(|k| k.family)
    }
}

fn features_of(spec: &ToyWorldSpec, img: ToyImage, noise: Option<&Normal<f64>>, rng: &mut impl Rng) -> Vec<f64> {
    let mut f = vec![0.0; spec.feature_dim()];
    f[img.color] = 1.0;
    f[spec.colors.len() + img.shape] = 1.0;
    f[spec.colors.len() + spec.shapes.len() + img.count - 1] = 1.0;
    if let Some(n) = noise {
        f.iter_mut().for_each(|v| *v += n.sample(rng));
    }
    f
}

fn plural(word: &str) -> String {
    format!("{word}s")
}

fn question_and_answer(spec: &ToyWorldSpec, family: QuestionFamily, img: ToyImage) -> (String, String) {
    let color = &spec.colors[img.color];
    let shape = &spec.shapes[img.shape];
    match family {
        QuestionFamily::Color => (format!("what color is the {shape}"), color.clone()),
        QuestionFamily::Shape => (format!("what shape is the {color} object"), shape.clone()),
        QuestionFamily::Count => (format!("how many {} are there", plural(shape)), img.count.to_string()),
        QuestionFamily::Bias => (BIAS_QUESTION.to_string(), BIAS_ANSWER.to_string()),
        QuestionFamily::Describe => ("what is in the image".to_string(), format!("{color}, {shape}")),
    }
}

/// Deterministic corpus for `spec`: one image per instance.
pub fn generate(spec: &ToyWorldSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let noise = if spec.noise > 0.0 {
        Some(Normal::new(0.0, spec.noise).map_err(|_| Error::precondition("invalid noise scale"))?)
    } else {
        None
    };
    let mut features = VisualFeatureStore::new(spec.feature_dim())?;
    let mut images = Vec::new();
    let mut key = Vec::new();
    let mut split = |prefix: &str, n: usize, rng: &mut crate::init::SeededRng| -> Result<Vec<QaInstance>> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let img = ToyImage {
                color: rng.random_range(0..spec.colors.len()),
                shape: rng.random_range(0..spec.shapes.len()),
                count: rng.random_range(1..=spec.max_count),
            };
            let family = spec.families[rng.random_range(0..spec.families.len())];
            let id = format!("{prefix}-{i:05}");
            let image = format!("{prefix}-img{i:05}");
            features.insert(image.clone(), features_of(spec, img, noise.as_ref(), rng))?;
            images.push((image.clone(), img));
            let (q, a) = question_and_answer(spec, family, img);
            let tokens = q.split_whitespace().map(String::from).collect();
            key.push(AnswerKeyEntry {
                id: id.clone(),
                family,
                answer: a.clone(),
            });
            out.push(QaInstance::new(id, image, tokens, vec![AnswerSet::parse(&a)])?);
        }
        Ok(out)
    };
    let train = split("train", spec.num_train, &mut rng)?;
    let test = split("test", spec.num_test, &mut rng)?;
    Ok(SyntheticCorpus {
        train,
        test,
        features,
        images,
        key,
    })
}

//! Non-neural baselines: global and per-question-type constants, a question
//! lookup table, and nearest-neighbour answers in question and image space.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use regex_automata::meta::Regex;
use serde::{Deserialize, Serialize};

use crate::data::{most_frequent, AnswerSet, QaInstance, VisualFeatureStore};
use crate::encoders::PretrainedEmbeddings;
use crate::error::{Error, Result};
use crate::math::cosine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionType {
    Color,
    Count,
    Size,
    Spatial,
    Other,
}

impl QuestionType {
    pub const ALL: [QuestionType; 5] = [
        QuestionType::Color,
        QuestionType::Count,
        QuestionType::Size,
        QuestionType::Spatial,
        QuestionType::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QuestionType::Color => "color",
            QuestionType::Count => "count",
            QuestionType::Size => "size",
            QuestionType::Spatial => "spatial",
            QuestionType::Other => "other",
        }
    }
}

/// Patterns tried in order on the lowercased question; `other` catches the rest.
pub const QUESTION_TYPE_RULES: [(QuestionType, &str); 4] = [
    (QuestionType::Color, r"what (is |the )?(the )?colou?r"),
    (QuestionType::Count, r"how many"),
    (
        QuestionType::Size,
        r"(?-u)\blargest\b|\bsmallest\b|\blarge\b|\bsmall\b|\bbig\b|\bbiggest\b",
    ),
    (
        QuestionType::Spatial,
        r"(?-u)\bfront\b|\bleft\b|\bright\b|\bbelow\b|\babove\b|\bbeneath\b|\bunder\b|\bbehind\b|\bbeside\b|\bacross\b|\bahead\b|\baround\b",
    ),
];

/// First-match cascade over [`QUESTION_TYPE_RULES`].
#[derive(Debug, Clone)]
pub struct QuestionTypeClassifier {
    rules: Vec<(QuestionType, Regex)>,
}

impl QuestionTypeClassifier {
    pub fn new() -> Result<Self> {
        let rules = QUESTION_TYPE_RULES
            .iter()
            .map(|&(t, p)| Regex::new(p).map(|r| (t, r)).map_err(|e| Error::Regex(e.to_string())))
            .collect::<Result<_>>()?;
        Ok(Self { rules })
    }

    pub fn classify(&self, question: &str) -> QuestionType {
        let q = question.to_lowercase();
        self.rules
            .iter()
            .find(|(_, r)| r.is_match(&q))
            .map_or(QuestionType::Other, |(t, _)| *t)
    }
}

/// Single-answer label of a training instance: its most frequent reference.
pub fn training_label(instance: &QaInstance) -> AnswerSet {
    let labels: Vec<String> = instance.answers.iter().map(AnswerSet::canonical).collect();
    most_frequent(labels.iter().map(String::as_str))
        .map(|l| AnswerSet::parse(&l))
        .unwrap_or_default()
}

fn mode_of<'a>(labels: impl IntoIterator<Item = &'a AnswerSet>) -> Option<AnswerSet> {
    let canon: Vec<String> = labels.into_iter().map(AnswerSet::canonical).collect();
    most_frequent(canon.iter().map(String::as_str)).map(|l| AnswerSet::parse(&l))
}

/// Most frequent training answer; ties go to the lexicographically smallest.
pub fn constant_baseline(train: &[QaInstance]) -> Result<AnswerSet> {
    let labels: Vec<AnswerSet> = train.iter().map(training_label).collect();
    mode_of(&labels).ok_or(Error::Empty("training instances"))
}

fn question_text(tokens: &[String]) -> String {
    tokens.join(" ")
}

#[derive(Debug, Clone)]
pub struct PerTypeConstant {
    classifier: QuestionTypeClassifier,
    by_type: BTreeMap<QuestionType, AnswerSet>,
    global: AnswerSet,
}

impl PerTypeConstant {
    pub fn fit(train: &[QaInstance]) -> Result<Self> {
        let classifier = QuestionTypeClassifier::new()?;
        let global = constant_baseline(train)?;
        let mut buckets: BTreeMap<QuestionType, Vec<AnswerSet>> = BTreeMap::new();
        for inst in train {
            let t = classifier.classify(&question_text(&inst.question));
            buckets.entry(t).or_default().push(training_label(inst));
        }
        let by_type = buckets
            .into_iter()
            .filter_map(|(t, labels)| mode_of(&labels).map(|m| (t, m)))
            .collect();
        Ok(Self {
            classifier,
            by_type,
            global,
        })
    }

    pub fn answer(&self, question: &[String]) -> AnswerSet {
        let t = self.classifier.classify(&question_text(question));
        self.by_type.get(&t).unwrap_or(&self.global).clone()
    }
}

fn lookup_key(question: &[String], strip_articles: bool) -> String {
    let kept: Vec<&str> = question
        .iter()
        .map(String::as_str)
        .filter(|w| !(strip_articles && (*w == "the" || *w == "a")))
        .collect();
    kept.join(" ")
}

/// Exact question → modal answer map; unseen questions get an empty answer.
#[derive(Debug, Clone)]
pub struct LookupTable {
    strip_articles: bool,
    map: BTreeMap<String, AnswerSet>,
}

impl LookupTable {
    pub fn fit(train: &[QaInstance], strip_articles: bool) -> Self {
        let mut groups: BTreeMap<String, Vec<AnswerSet>> = BTreeMap::new();
        for inst in train {
            groups
                .entry(lookup_key(&inst.question, strip_articles))
                .or_default()
                .push(training_label(inst));
        }
        let map = groups
            .into_iter()
            .filter_map(|(k, labels)| mode_of(&labels).map(|m| (k, m)))
            .collect();
        Self { strip_articles, map }
    }

    pub fn answer(&self, question: &[String]) -> AnswerSet {
        self.map
            .get(&lookup_key(question, self.strip_articles))
            .cloned()
            .unwrap_or_default()
    }
}

/// Training questions as bag-of-words vectors over pretrained embeddings.
#[derive(Debug, Clone)]
struct QuestionIndex {
    mean: bool,
    vectors: Vec<Vec<f64>>,
    answers: Vec<AnswerSet>,
    images: Vec<String>,
}

impl QuestionIndex {
    fn build(train: &[QaInstance], embeddings: &PretrainedEmbeddings, mean: bool) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("training instances"));
        }
        Ok(Self {
            mean,
            vectors: train
                .iter()
                .map(|i| embeddings.bag_of_words(&i.question, mean))
                .collect(),
            answers: train.iter().map(training_label).collect(),
            images: train.iter().map(|i| i.image.clone()).collect(),
        })
    }

    /// Indices of the `k` most similar training questions, most similar first;
    /// ties keep the lower index first.
    fn nearest(&self, query: &[f64], k: usize) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = self.vectors.iter().map(|v| cosine(query, v)).zip(0..).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.into_iter().take(k).map(|(_, i)| i).collect()
    }
}

/// Answer of the single most similar training question (cosine over BOW).
#[derive(Debug, Clone)]
pub struct NnQuestionOnly {
    index: QuestionIndex,
}

impl NnQuestionOnly {
    /// `mean` averages instead of summing the word vectors.
    pub fn fit(train: &[QaInstance], embeddings: &PretrainedEmbeddings, mean: bool) -> Result<Self> {
        Ok(Self {
            index: QuestionIndex::build(train, embeddings, mean)?,
        })
    }

    pub fn answer(&self, question: &[String], embeddings: &PretrainedEmbeddings) -> AnswerSet {
        let q = embeddings.bag_of_words(question, self.index.mean);
        let best = self.index.nearest(&q, 1)[0];
        self.index.answers[best].clone()
    }
}

/// Outcome of a visual nearest-neighbour query.
#[derive(Debug, Clone, PartialEq)]
pub struct NnVisualAnswer {
    pub answer: AnswerSet,
    /// Candidates dropped because their image had no feature vector.
    pub skipped: usize,
}

/// Among the `k` most similar training questions, answer with the one whose
/// image is closest to the test image.
#[derive(Debug, Clone)]
pub struct NnVisual {
    index: QuestionIndex,
    k: usize,
}

impl NnVisual {
    pub const DEFAULT_K: usize = 4;

    pub fn fit(train: &[QaInstance], embeddings: &PretrainedEmbeddings, mean: bool, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::precondition("k must be at least 1"));
        }
        Ok(Self {
            index: QuestionIndex::build(train, embeddings, mean)?,
            k,
        })
    }

    pub fn candidates(&self, question: &[String], embeddings: &PretrainedEmbeddings) -> Vec<usize> {
        let q = embeddings.bag_of_words(question, self.index.mean);
        self.index.nearest(&q, self.k)
    }

    /// A missing test-image vector leaves only the question ranking, so the
    /// top candidate answers.
    pub fn answer(
        &self,
        question: &[String],
        image: Option<&[f64]>,
        embeddings: &PretrainedEmbeddings,
        features: &VisualFeatureStore,
    ) -> NnVisualAnswer {
        let cands = self.candidates(question, embeddings);
        let Some(test) = image else {
            return NnVisualAnswer {
                answer: self.index.answers[cands[0]].clone(),
                skipped: 0,
            };
        };
        let mut skipped = 0;
        let mut best: Option<(f64, usize)> = None;
        for &c in &cands {
            match features.get(&self.index.images[c]) {
                Some(f) => {
                    let s = cosine(test, f);
                    if best.is_none_or(|(bs, _)| s > bs) {
                        best = Some((s, c));
                    }
                }
                None => skipped += 1,
            }
        }
        NnVisualAnswer {
            answer: best.map(|(_, c)| self.index.answers[c].clone()).unwrap_or_default(),
            skipped,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::preprocess_question;
    use alloc::vec;

    fn inst(id: &str, image: &str, q: &str, a: &str) -> QaInstance {
        QaInstance::new(id, image, preprocess_question(q).unwrap(), vec![AnswerSet::parse(a)]).unwrap()
    }

    #[test]
    fn question_types() {
        let c = QuestionTypeClassifier::new().unwrap();
        assert_eq!(c.classify("what is the colour of the comforter"), QuestionType::Color);
        assert_eq!(c.classify("how many chairs are there"), QuestionType::Count);
        assert_eq!(c.classify("what is left of sink"), QuestionType::Spatial);
        assert_eq!(c.classify("what is the largest object"), QuestionType::Size);
        assert_eq!(c.classify("what is leftover"), QuestionType::Other);
        assert_eq!(c.classify("What COLOR is the big chair"), QuestionType::Color);
    }

    #[test]
    fn constant_modes() {
        let train: Vec<_> = ["2", "2", "2", "blue"].iter().map(|a| inst("i", "x", "q", a)).collect();
        assert_eq!(constant_baseline(&train).unwrap().canonical(), "2");
        let tie = [inst("1", "x", "q", "b"), inst("2", "x", "q", "a")];
        assert_eq!(constant_baseline(&tie).unwrap().canonical(), "a");
        assert!(constant_baseline(&[]).is_err());
    }

    #[test]
    fn per_type_constant_buckets() {
        let train = [
            inst("1", "x", "how many chairs", "2"),
            inst("2", "x", "how many beds", "2"),
            inst("3", "x", "what color is the wall", "white"),
            inst("4", "x", "what is on the table", "cup"),
            inst("5", "x", "what is on the desk", "cup"),
            inst("6", "x", "what is in the box", "cup"),
        ];
        let b = PerTypeConstant::fit(&train).unwrap();
        assert_eq!(
            b.answer(&preprocess_question("how many lamps").unwrap()).canonical(),
            "2"
        );
        assert_eq!(
            b.answer(&preprocess_question("what color is the lamp").unwrap())
                .canonical(),
            "white"
        );
        assert_eq!(
            b.answer(&preprocess_question("what is behind the door").unwrap())
                .canonical(),
            "cup"
        );
    }

    #[test]
    fn lookup_table_contract() {
        let train = [inst("1", "x", "q1", "a"), inst("2", "x", "what is on table", "lamp")];
        let t = LookupTable::fit(&train, false);
        assert_eq!(t.answer(&preprocess_question("q1").unwrap()).canonical(), "a");
        assert!(t.answer(&preprocess_question("q9").unwrap()).is_empty());
        assert!(t
            .answer(&preprocess_question("what is on the table").unwrap())
            .is_empty());
        let s = LookupTable::fit(&train, true);
        assert_eq!(
            s.answer(&preprocess_question("what is on the table").unwrap())
                .canonical(),
            "lamp"
        );
    }

    fn embeddings() -> PretrainedEmbeddings {
        let mut e = PretrainedEmbeddings::new(3).unwrap();
        e.insert("red", vec![1.0, 0.0, 0.0]).unwrap();
        e.insert("blue", vec![0.0, 1.0, 0.0]).unwrap();
        e.insert("cup", vec![0.0, 0.0, 1.0]).unwrap();
        e
    }

    #[test]
    fn nn_question_only_finds_the_closest_question() {
        let e = embeddings();
        let train = [
            inst("1", "x", "red", "a"),
            inst("2", "x", "blue", "b"),
            inst("3", "x", "red cup", "c"),
        ];
        let nn = NnQuestionOnly::fit(&train, &e, false).unwrap();
        for t in &train {
            assert_eq!(nn.answer(&t.question, &e), t.answers[0]);
        }
        // cos(red+blue, red)=cos(red+blue, blue)=0.707 > cos(red+blue, red+cup)=0.5; tie → lower index
        assert_eq!(
            nn.answer(&preprocess_question("red blue").unwrap(), &e).canonical(),
            "a"
        );
        assert!(NnQuestionOnly::fit(&[], &e, false).is_err());
    }

    #[test]
    fn nn_visual_prefers_the_closest_image() {
        let e = embeddings();
        let train = [
            inst("1", "i1", "red", "a"),
            inst("2", "i2", "red", "b"),
            inst("3", "i3", "red cup", "c"),
            inst("4", "missing", "red", "d"),
            inst("5", "i5", "blue", "e"),
        ];
        let mut f = VisualFeatureStore::new(2).unwrap();
        f.insert("i1", vec![1.0, 0.0]).unwrap();
        f.insert("i2", vec![0.0, 1.0]).unwrap();
        f.insert("i3", vec![1.0, 1.0]).unwrap();
        f.insert("i5", vec![0.1, 1.0]).unwrap();
        let nn = NnVisual::fit(&train, &e, false, NnVisual::DEFAULT_K).unwrap();
        let q = preprocess_question("red").unwrap();
        assert_eq!(nn.candidates(&q, &e), vec![0, 1, 3, 2]);
        let out = nn.answer(&q, Some(&[0.2, 1.0]), &e, &f);
        assert_eq!(
            out,
            NnVisualAnswer {
                answer: AnswerSet::parse("b"),
                skipped: 1
            }
        );
        let out = nn.answer(&q, Some(&[1.0, 1.0]), &e, &f);
        assert_eq!(out.answer.canonical(), "c");
    }
}

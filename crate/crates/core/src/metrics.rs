//! Corpus metrics over answer sets: accuracy, WUPS@τ, average and min
//! consensus, VQA consensus accuracy and inter-human agreement buckets.
//!
//! Scores are fractions in `[0, 1]`; reports multiply by 100. Corpus means
//! sum in record order so results are bit-reproducible.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::AnswerSet;
use crate::error::{Error, Result};
use crate::taxonomy::{Taxonomy, DEFAULT_DOWNWEIGHT};

/// Word-level membership measure μ(a, t) ∈ [0, 1].
pub trait Membership {
    fn mu(&self, a: &str, t: &str) -> f64;
}

/// Indicator of string equality.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatch;

impl Membership for ExactMatch {
    fn mu(&self, a: &str, t: &str) -> f64 {
        if a == t {
            1.0
        } else {
            0.0
        }
    }
}

/// Thresholded Wu-Palmer similarity μ_τ.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdedWup<'t> {
    taxonomy: &'t Taxonomy,
    threshold: f64,
    downweight: f64,
}

impl<'t> ThresholdedWup<'t> {
    pub fn new(taxonomy: &'t Taxonomy, threshold: f64) -> Result<Self> {
        Self::with_downweight(taxonomy, threshold, DEFAULT_DOWNWEIGHT)
    }

    pub fn with_downweight(taxonomy: &'t Taxonomy, threshold: f64, downweight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::precondition("WUPS threshold must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&downweight) {
            return Err(Error::precondition("down-weight factor must lie in [0, 1]"));
        }
        Ok(Self {
            taxonomy,
            threshold,
            downweight,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl Membership for ThresholdedWup<'_> {
    fn mu(&self, a: &str, t: &str) -> f64 {
        self.taxonomy.mu_thresholded(a, t, self.threshold, self.downweight)
    }
}

fn coverage<M: Membership + ?Sized>(from: &AnswerSet, to: &AnswerSet, mu: &M) -> f64 {
    from.words()
        .iter()
        .map(|a| to.words().iter().map(|t| mu.mu(a, t)).fold(0.0, f64::max))
        .product()
}

/// `min(∏_{a∈A} max_{t∈T} μ(a,t), ∏_{t∈T} max_{a∈A} μ(a,t))`.
pub fn wups_instance<M: Membership + ?Sized>(predicted: &AnswerSet, reference: &AnswerSet, mu: &M) -> Result<f64> {
    if predicted.is_empty() || reference.is_empty() {
        return Err(Error::Empty("answer set"));
    }
    Ok(coverage(predicted, reference, mu).min(coverage(reference, predicted, mu)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    /// Empty when the predictor abstained; such records score 0.
    pub predicted: AnswerSet,
    pub references: Vec<AnswerSet>,
}

impl PredictionRecord {
    fn check(&self) -> Result<()> {
        if self.references.is_empty() {
            return Err(Error::Empty("reference answers"));
        }
        if self.references.iter().any(AnswerSet::is_empty) {
            return Err(Error::Empty("reference answer set"));
        }
        Ok(())
    }

    fn score<M: Membership + ?Sized>(&self, reference: &AnswerSet, mu: &M) -> Result<f64> {
        if self.predicted.is_empty() {
            return Ok(0.0);
        }
        wups_instance(&self.predicted, reference, mu)
    }
}

fn mean(values: impl Iterator<Item = Result<f64>>) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("prediction records"));
    }
    Ok(sum / n as f64)
}

/// Mean WUPS against the first reference of every record.
pub fn wups_corpus<M: Membership + ?Sized>(records: &[PredictionRecord], mu: &M) -> Result<f64> {
    mean(records.iter().map(|r| {
        r.check()?;
        r.score(&r.references[0], mu)
    }))
}

/// Fraction of records whose prediction equals the first reference set.
pub fn accuracy(records: &[PredictionRecord]) -> Result<f64> {
    wups_corpus(records, &ExactMatch)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConsensusMode {
    /// Mean over all references.
    Average,
    /// Best single reference.
    Min,
}

/// Per-record consensus score.
pub fn consensus_instance<M: Membership + ?Sized>(
    record: &PredictionRecord,
    mu: &M,
    mode: ConsensusMode,
) -> Result<f64> {
    record.check()?;
    let scores = record.references.iter().map(|t| record.score(t, mu));
    match mode {
        ConsensusMode::Average => mean(scores),
        ConsensusMode::Min => scores.into_iter().try_fold(0.0, |acc: f64, s| Ok(acc.max(s?))),
    }
}

/// ACM: `1/(NK) Σ_i Σ_k WUPS(A^i, T^i_k)`; MCM: `1/N Σ_i max_k WUPS(A^i, T^i_k)`.
/// With varying `K`, the average mode averages per-record means.
pub fn consensus_score<M: Membership + ?Sized>(
    records: &[PredictionRecord],
    mu: &M,
    mode: ConsensusMode,
) -> Result<f64> {
    mean(records.iter().map(|r| consensus_instance(r, mu, mode)))
}

/// `min(#matching human answers / 3, 1)`.
pub fn vqa_accuracy(predicted: &str, humans: &[String]) -> Result<f64> {
    if humans.is_empty() {
        return Err(Error::Empty("human answers"));
    }
    let matches = humans.iter().filter(|h| h.as_str() == predicted).count();
    Ok((matches as f64 / 3.0).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Agreement {
    /// Every reference agrees.
    Full,
    /// At least `⌈K/2⌉` references agree.
    AtLeastHalf,
    /// Some references agree, fewer than half.
    Partial,
    /// All references differ.
    None,
}

impl Agreement {
    pub const ALL: [Agreement; 4] = [
        Agreement::Full,
        Agreement::AtLeastHalf,
        Agreement::Partial,
        Agreement::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Agreement::Full => "full",
            Agreement::AtLeastHalf => "at-least-half",
            Agreement::Partial => "partial",
            Agreement::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgreementCriterion {
    /// Two references agree when their answer sets are identical.
    #[default]
    SetIdentity,
    /// Two references agree when they share at least one word.
    WordOverlap,
}

/// Bucket of a question by the largest group of agreeing references.
pub fn agreement_split(references: &[AnswerSet], criterion: AgreementCriterion) -> Result<Agreement> {
    let k = references.len();
    if k < 2 {
        return Err(Error::precondition("agreement needs at least two references"));
    }
    let agree = |a: &AnswerSet, b: &AnswerSet| match criterion {
        AgreementCriterion::SetIdentity => a == b,
        AgreementCriterion::WordOverlap => a.words().iter().any(|w| b.contains(w)),
    };
    let m = references
        .iter()
        .map(|a| references.iter().filter(|b| agree(a, b)).count())
        .max()
        .unwrap_or(1);
    Ok(if m == k {
        Agreement::Full
    } else if m == 1 {
        Agreement::None
    } else if m >= k.div_ceil(2) {
        Agreement::AtLeastHalf
    } else {
        Agreement::Partial
    })
}

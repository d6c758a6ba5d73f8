//! Evaluation report: metric × subset table rendered as text and JSON.

use std::collections::BTreeMap;

use ayn_core::baselines::QuestionTypeClassifier;
use ayn_core::data::AnswerSet;
use ayn_core::metrics::{
    accuracy, agreement_split, consensus_score, vqa_accuracy, wups_corpus, AgreementCriterion, ConsensusMode,
    ExactMatch, Membership, PredictionRecord, ThresholdedWup,
};
use ayn_core::taxonomy::Taxonomy;
use serde::{Deserialize, Serialize};

use crate::error::{AynError, Result};
use crate::io::ReferenceRecord;

pub const REPORT_SCHEMA: &str = "ayn-report/1";
pub const HEADLINE_THRESHOLDS: [f64; 2] = [0.9, 0.0];

/// One table row; scores are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub subset: String,
    pub count: usize,
    pub accuracy: f64,
    #[serde(rename = "wups@0.9")]
    pub wups_09: f64,
    #[serde(rename = "wups@0.0")]
    pub wups_00: f64,
    /// Present when some reference has more than one human answer.
    #[serde(rename = "acm@0.9")]
    pub acm_09: Option<f64>,
    #[serde(rename = "acm@0.0")]
    pub acm_00: Option<f64>,
    #[serde(rename = "mcm@0.9")]
    pub mcm_09: Option<f64>,
    #[serde(rename = "mcm@0.0")]
    pub mcm_00: Option<f64>,
    pub vqa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    /// "taxonomy" or "exact-match".
    pub membership: String,
    pub downweight: f64,
    pub seed: Option<u64>,
    /// Reference ids without a prediction; they score 0.
    pub missing_predictions: usize,
    /// Predictions whose id has no reference; they are ignored.
    pub unmatched_predictions: usize,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone)]
pub struct EvalOptions<'t> {
    pub taxonomy: Option<&'t Taxonomy>,
    pub downweight: f64,
    pub vqa: bool,
    pub agreement: AgreementCriterion,
    pub seed: Option<u64>,
}

impl Default for EvalOptions<'_> {
    fn default() -> Self {
        Self {
            taxonomy: None,
            downweight: ayn_core::taxonomy::DEFAULT_DOWNWEIGHT,
            vqa: false,
            agreement: AgreementCriterion::SetIdentity,
            seed: None,
        }
    }
}

struct Scored<'a> {
    record: PredictionRecord,
    raw_prediction: String,
    reference: &'a ReferenceRecord,
}

fn pct(x: f64) -> f64 {
    100.0 * x
}

fn row(subset: &str, items: &[&Scored<'_>], opts: &EvalOptions<'_>) -> Result<ReportRow> {
    let records: Vec<PredictionRecord> = items.iter().map(|s| s.record.clone()).collect();
    let (mu_hi, mu_lo): (Box<dyn Membership>, Box<dyn Membership>) = match opts.taxonomy {
        Some(t) => (
            Box::new(ThresholdedWup::with_downweight(
                t,
                HEADLINE_THRESHOLDS[0],
                opts.downweight,
            )?),
            Box::new(ThresholdedWup::with_downweight(
                t,
                HEADLINE_THRESHOLDS[1],
                opts.downweight,
            )?),
        ),
        None => (Box::new(ExactMatch), Box::new(ExactMatch)),
    };
    let multi = records.iter().any(|r| r.references.len() > 1);
    let consensus = |mu: &dyn Membership, mode| -> Result<Option<f64>> {
        Ok(if multi {
            Some(pct(consensus_score(&records, mu, mode)?))
        } else {
            None
        })
    };
    let vqa = if opts.vqa {
        let mut sum = 0.0;
        for s in items {
            sum += vqa_accuracy(&s.raw_prediction, &s.reference.raw_answers)?;
        }
        Some(pct(sum / items.len() as f64))
    } else {
        None
    };
    Ok(ReportRow {
        subset: subset.to_string(),
        count: records.len(),
        accuracy: pct(accuracy(&records)?),
        wups_09: pct(wups_corpus(&records, mu_hi.as_ref())?),
        wups_00: pct(wups_corpus(&records, mu_lo.as_ref())?),
        acm_09: consensus(mu_hi.as_ref(), ConsensusMode::Average)?,
        acm_00: consensus(mu_lo.as_ref(), ConsensusMode::Average)?,
        mcm_09: consensus(mu_hi.as_ref(), ConsensusMode::Min)?,
        mcm_00: consensus(mu_lo.as_ref(), ConsensusMode::Min)?,
        vqa,
    })
}

/// Scores `predictions` (id → raw answer string) against `references`.
/// Rows: overall, then per question type when questions are known, then per
/// agreement bucket when references have at least two answers.
pub fn evaluate(
    predictions: &BTreeMap<String, String>,
    references: &[ReferenceRecord],
    opts: &EvalOptions<'_>,
) -> Result<Report> {
    let matched = references.iter().filter(|r| predictions.contains_key(&r.id)).count();
    if matched == 0 {
        return Err(AynError::Invalid("no prediction id matches a reference id".into()));
    }
    let known: std::collections::BTreeSet<&str> = references.iter().map(|r| r.id.as_str()).collect();
    let unmatched_predictions = predictions.keys().filter(|k| !known.contains(k.as_str())).count();
    let missing_predictions = references.len() - matched;
    if missing_predictions > 0 {
        log::warn!("{missing_predictions} references have no prediction and score 0");
    }
    let scored: Vec<Scored<'_>> = references
        .iter()
        .map(|r| {
            let raw = predictions.get(&r.id).cloned().unwrap_or_default();
            let predicted = AnswerSet::parse(&raw);
            Scored {
                raw_prediction: predicted.canonical(),
                record: PredictionRecord {
                    id: r.id.clone(),
                    predicted,
                    references: r.answers.clone(),
                },
                reference: r,
            }
        })
        .collect();

    let all: Vec<&Scored<'_>> = scored.iter().collect();
    let mut rows = vec![row("overall", &all, opts)?];

    if scored.iter().all(|s| s.reference.question.is_some()) {
        let classifier = QuestionTypeClassifier::new()?;
        let mut by_type: BTreeMap<_, Vec<&Scored<'_>>> = BTreeMap::new();
        for s in &scored {
            let q = s.reference.question.as_deref().unwrap_or_default();
            by_type.entry(classifier.classify(q)).or_default().push(s);
        }
        for (t, items) in by_type {
            rows.push(row(&format!("type:{}", t.name()), &items, opts)?);
        }
    }

    if scored.iter().all(|s| s.reference.answers.len() >= 2) {
        let mut by_agreement: BTreeMap<_, Vec<&Scored<'_>>> = BTreeMap::new();
        for s in &scored {
            by_agreement
                .entry(agreement_split(&s.reference.answers, opts.agreement)?)
                .or_default()
                .push(s);
        }
        for (a, items) in by_agreement {
            rows.push(row(&format!("agreement:{}", a.name()), &items, opts)?);
        }
    }

    Ok(Report {
        schema: REPORT_SCHEMA.into(),
        membership: if opts.taxonomy.is_some() {
            "taxonomy"
        } else {
            "exact-match"
        }
        .into(),
        downweight: opts.downweight,
        seed: opts.seed,
        missing_predictions,
        unmatched_predictions,
        rows,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

/// Fixed-width table with the headline columns first.
pub fn render_text(report: &Report) -> String {
    let extra = report.rows.iter().any(|r| r.acm_09.is_some());
    let vqa = report.rows.iter().any(|r| r.vqa.is_some());
    let mut header = vec!["Subset", "N", "Accuracy", "WUPS@0.9", "WUPS@0.0"];
    if extra {
        header.extend(["ACM@0.9", "ACM@0.0", "MCM@0.9", "MCM@0.0"]);
    }
    if vqa {
        header.push("VQA");
    }
    let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in &report.rows {
        let mut line = vec![
            r.subset.clone(),
            r.count.to_string(),
            format!("{:.2}", r.accuracy),
            format!("{:.2}", r.wups_09),
            format!("{:.2}", r.wups_00),
        ];
        if extra {
            line.extend([cell(r.acm_09), cell(r.acm_00), cell(r.mcm_09), cell(r.mcm_00)]);
        }
        if vqa {
            line.push(cell(r.vqa));
        }
        table.push(line);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, line) in table.iter().enumerate() {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    out.push_str(&format!(
        "membership: {}; missing predictions: {}\n",
        report.membership, report.missing_predictions
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(id: &str, q: &str, answers: &[&str]) -> ReferenceRecord {
        ReferenceRecord {
            id: id.into(),
            question: Some(q.into()),
            answers: answers.iter().map(|a| AnswerSet::parse(a)).collect(),
            raw_answers: answers.iter().map(|a| AnswerSet::parse(a).canonical()).collect(),
        }
    }

    #[test]
    fn all_correct_is_exactly_100() {
        let refs = [
            reference("1", "how many chairs", &["2"]),
            reference("2", "what color is it", &["red, blue"]),
        ];
        let preds: BTreeMap<String, String> = [("1", "2"), ("2", "blue,red")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let r = evaluate(&preds, &refs, &EvalOptions::default()).unwrap();
        assert_eq!(
            (r.rows[0].accuracy, r.rows[0].wups_09, r.rows[0].wups_00),
            (100.0, 100.0, 100.0)
        );
        assert_eq!(
            r.rows.iter().map(|r| r.subset.as_str()).collect::<Vec<_>>(),
            ["overall", "type:color", "type:count"]
        );
        assert!(render_text(&r).contains("Accuracy  WUPS@0.9  WUPS@0.0"));
    }

    #[test]
    fn missing_and_empty_predictions_score_zero() {
        let refs = [reference("1", "q", &["a"]), reference("2", "q", &["b"])];
        let preds: BTreeMap<String, String> = [("1".to_string(), String::new())].into();
        let r = evaluate(&preds, &refs, &EvalOptions::default()).unwrap();
        assert_eq!(r.rows[0].accuracy, 0.0);
        assert_eq!(r.missing_predictions, 1);
        let none: BTreeMap<String, String> = [("x".to_string(), "a".to_string())].into();
        assert!(evaluate(&none, &refs, &EvalOptions::default()).is_err());
    }

    #[test]
    fn consensus_columns_and_agreement_rows() {
        let refs = [reference("1", "q", &["cat", "dog"]), reference("2", "q", &["a", "a"])];
        let preds: BTreeMap<String, String> = [("1", "cat"), ("2", "a")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let r = evaluate(
            &preds,
            &refs,
            &EvalOptions {
                vqa: true,
                ..EvalOptions::default()
            },
        )
        .unwrap();
        assert_eq!(r.rows[0].acm_00, Some(75.0));
        assert_eq!(r.rows[0].mcm_00, Some(100.0));
        assert!(r.rows.iter().any(|r| r.subset == "agreement:full"));
        assert!(r.rows.iter().any(|r| r.subset == "agreement:none"));
        // 1/3 and 2/3 of the way to three matching humans
        assert!((r.rows[0].vqa.unwrap() - 50.0).abs() < 1e-12);
    }
}

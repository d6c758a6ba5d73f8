use std::path::Path;

use ayn_core::data::{preprocess_question, AnswerSet, QaInstance};
use serde::{Deserialize, Serialize};

use super::{has_extension, read_text};
use crate::error::{AynError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum QaFormat {
    /// Alternating question and answer lines.
    Daquar,
    /// One JSON object per line.
    Jsonl,
}

impl QaFormat {
    /// `.txt` files are DAQUAR, everything else JSONL.
    pub fn detect(path: &Path) -> Self {
        if has_extension(path, "txt") {
            QaFormat::Daquar
        } else {
            QaFormat::Jsonl
        }
    }
}

pub fn load_qa(path: &Path, format: Option<QaFormat>) -> Result<Vec<QaInstance>> {
    match format.unwrap_or_else(|| QaFormat::detect(path)) {
        QaFormat::Daquar => load_daquar_txt(path),
        QaFormat::Jsonl => load_qa_jsonl(path),
    }
}

pub fn load_daquar_txt(path: &Path) -> Result<Vec<QaInstance>> {
    parse_daquar(&read_text(path)?, path)
}

fn image_token(tok: &str) -> Option<&str> {
    let t = tok.trim_end_matches('?');
    let digits = t.strip_prefix("image")?;
    (!digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())).then_some(t)
}

/// Lines alternate question / answer; blank lines are ignored. The image id
/// is the `image<N>` token, which is removed from the question together with
/// a directly preceding "in" or "in the". Instance ids are 0-based pair
/// indices.
pub fn parse_daquar(text: &str, path: &Path) -> Result<Vec<QaInstance>> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    if !lines.len().is_multiple_of(2) {
        return Err(AynError::format(
            path,
            lines.last().map_or(0, |l| l.0),
            "odd number of lines: every question needs an answer line",
        ));
    }
    let mut spaced = 0usize;
    let mut attached = 0usize;
    let mut out = Vec::with_capacity(lines.len() / 2);
    for (n, pair) in lines.chunks(2).enumerate() {
        let (qline, question) = pair[0];
        let (aline, answer) = pair[1];
        if question.ends_with(" ?") {
            spaced += 1;
        } else if question.ends_with('?') {
            attached += 1;
        }
        let raw: Vec<&str> = question.split_whitespace().collect();
        let pos = raw
            .iter()
            .position(|t| image_token(&t.to_lowercase()).is_some())
            .ok_or_else(|| AynError::format(path, qline, "question has no image<N> token"))?;
        let image = image_token(&raw[pos].to_lowercase())
            .expect("matched above")
            .to_string();
        let mut kept: Vec<&str> = raw[..pos].to_vec();
        if kept.last().is_some_and(|t| t.eq_ignore_ascii_case("the"))
            && kept.len() >= 2
            && kept[kept.len() - 2].eq_ignore_ascii_case("in")
        {
            kept.truncate(kept.len() - 2);
        } else if kept.last().is_some_and(|t| t.eq_ignore_ascii_case("in")) {
            kept.pop();
        }
        kept.extend(&raw[pos + 1..]);
        let tokens = preprocess_question(&kept.join(" ")).map_err(|e| AynError::format(path, qline, e.to_string()))?;
        let answers = AnswerSet::parse(answer);
        if answers.is_empty() {
            return Err(AynError::format(path, aline, "empty answer"));
        }
        out.push(
            QaInstance::new(n.to_string(), image, tokens, vec![answers])
                .map_err(|e| AynError::format(path, qline, e.to_string()))?,
        );
    }
    log::info!(
        "{}: {} DAQUAR pairs ({spaced} with spaced '?', {attached} with attached '?')",
        path.display(),
        out.len()
    );
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QaLine {
    id: String,
    image: String,
    question: String,
    answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    confident: Option<Vec<bool>>,
}

pub fn load_qa_jsonl(path: &Path) -> Result<Vec<QaInstance>> {
    parse_qa_jsonl(&read_text(path)?, path)
}

pub fn parse_qa_jsonl(text: &str, path: &Path) -> Result<Vec<QaInstance>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: String| AynError::format(path, i + 1, m);
        let rec: QaLine = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if rec.answers.is_empty() {
            return Err(err("\"answers\" must not be empty".into()));
        }
        let question = preprocess_question(&rec.question).map_err(|e| err(e.to_string()))?;
        let mut inst = QaInstance::new(
            rec.id,
            rec.image,
            question,
            rec.answers.iter().map(|a| AnswerSet::parse(a)).collect(),
        )
        .map_err(|e| err(e.to_string()))?;
        inst.confident = rec.confident;
        inst.validate().map_err(|e| err(e.to_string()))?;
        out.push(inst);
    }
    Ok(out)
}

pub fn write_qa_jsonl(instances: &[QaInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        let line = QaLine {
            id: inst.id.clone(),
            image: inst.image.clone(),
            question: inst.question.join(" "),
            answers: inst.answers.iter().map(AnswerSet::canonical).collect(),
            confident: inst.confident.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

/// Reference answers for evaluation, with the question when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRecord {
    pub id: String,
    pub question: Option<String>,
    pub answers: Vec<AnswerSet>,
    /// Raw answer strings, used for VQA accuracy.
    pub raw_answers: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct RefLine {
    id: String,
    answers: Vec<String>,
    #[serde(default)]
    question: Option<String>,
}

/// DAQUAR text or JSONL with at least `id` and `answers`.
pub fn load_references(path: &Path, format: Option<QaFormat>) -> Result<Vec<ReferenceRecord>> {
    match format.unwrap_or_else(|| QaFormat::detect(path)) {
        QaFormat::Daquar => Ok(load_daquar_txt(path)?
            .into_iter()
            .map(|i| ReferenceRecord {
                id: i.id,
                question: Some(i.question.join(" ")),
                raw_answers: i.answers.iter().map(AnswerSet::canonical).collect(),
                answers: i.answers,
            })
            .collect()),
        QaFormat::Jsonl => {
            let text = read_text(path)?;
            let mut out = Vec::new();
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let rec: RefLine =
                    serde_json::from_str(line).map_err(|e| AynError::format(path, i + 1, e.to_string()))?;
                let answers: Vec<AnswerSet> = rec.answers.iter().map(|a| AnswerSet::parse(a)).collect();
                if answers.is_empty() || answers.iter().any(AnswerSet::is_empty) {
                    return Err(AynError::format(
                        path,
                        i + 1,
                        "every reference needs a non-empty answer",
                    ));
                }
                out.push(ReferenceRecord {
                    id: rec.id,
                    question: rec.question,
                    raw_answers: rec.answers.iter().map(|a| AnswerSet::parse(a).canonical()).collect(),
                    answers,
                });
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("t.txt")
    }

    #[test]
    fn daquar_pairs() {
        let text = "what is on the bed in image42 ?\nbed sheets, pillow\nhow many chairs are in the image7?\n2\n";
        let q = parse_daquar(text, p()).unwrap();
        assert_eq!(q.len(), 2);
        assert_eq!(q[0].image, "image42");
        assert_eq!(q[0].question, ["what", "is", "on", "the", "bed"]);
        assert_eq!(q[0].answers[0].words(), ["bed sheets", "pillow"]);
        assert_eq!(q[1].image, "image7");
        assert_eq!(q[1].question, ["how", "many", "chairs", "are"]);
        assert_eq!(q[1].id, "1");
    }

    #[test]
    fn daquar_errors() {
        assert!(matches!(
            parse_daquar("q in image1 ?\na\nq2 image2\n", p()),
            Err(AynError::Format { .. })
        ));
        assert!(matches!(
            parse_daquar("what is this ?\nchair\n", p()),
            Err(AynError::Format { line: 1, .. })
        ));
    }

    #[test]
    fn jsonl_errors_are_line_numbered() {
        let good = r#"{"id":"1","image":"i","question":"What?","answers":["a","b"]}"#;
        assert_eq!(parse_qa_jsonl(good, p()).unwrap()[0].answers.len(), 2);
        let missing = format!("{good}\n{}", r#"{"id":"2","image":"i","question":"What?"}"#);
        assert!(matches!(
            parse_qa_jsonl(&missing, p()),
            Err(AynError::Format { line: 2, .. })
        ));
        let empty = r#"{"id":"1","image":"i","question":"What?","answers":[]}"#;
        assert!(parse_qa_jsonl(empty, p()).is_err());
        assert!(matches!(
            parse_qa_jsonl("{not json", p()),
            Err(AynError::Format { line: 1, .. })
        ));
    }

    #[test]
    fn daquar_to_jsonl_round_trip() {
        let text =
            "what is on the bed in image42 ?\nBed sheets, pillow\nwhat colour is the wall in the image3 ?\nwhite\n";
        let a = parse_daquar(text, p()).unwrap();
        let b = parse_qa_jsonl(&write_qa_jsonl(&a), p()).unwrap();
        assert_eq!(a, b);
    }
}

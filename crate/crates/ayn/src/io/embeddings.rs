use std::path::Path;

use ayn_core::encoders::PretrainedEmbeddings;

use super::read_text;
use crate::error::{AynError, Result};

pub fn load_embeddings(path: &Path) -> Result<PretrainedEmbeddings> {
    parse_embeddings(&read_text(path)?, path)
}

/// `word v1 … vd` per line. A leading word2vec `count dim` header is skipped.
pub fn parse_embeddings(text: &str, path: &Path) -> Result<PretrainedEmbeddings> {
    let mut table: Option<PretrainedEmbeddings> = None;
    for (i, line) in text.lines().enumerate() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.is_empty() {
            continue;
        }
        if i == 0 && parts.len() == 2 && parts.iter().all(|p| p.parse::<usize>().is_ok()) {
            continue;
        }
        let err = |m: String| AynError::format(path, i + 1, m);
        if parts.len() < 2 {
            return Err(err("expected a word followed by its vector".into()));
        }
        let vector = parts[1..]
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| err(format!("bad value {v:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        let t = match &mut table {
            Some(t) => t,
            None => table.insert(PretrainedEmbeddings::new(vector.len()).map_err(|e| err(e.to_string()))?),
        };
        t.insert(parts[0], vector).map_err(|e| err(e.to_string()))?;
    }
    table.ok_or_else(|| AynError::format(path, 0, "no word vectors"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_header() {
        let e = parse_embeddings("2 3\nred 1 0 0\nblue 0 1 0\n", Path::new("e")).unwrap();
        assert_eq!(e.dim(), 3);
        assert_eq!(e.get("blue"), Some(&[0.0, 1.0, 0.0][..]));
        assert!(parse_embeddings("red 1 0\nblue 0 1 0\n", Path::new("e")).is_err());
    }
}

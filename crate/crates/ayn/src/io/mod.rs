//! File formats: question/answer corpora, image features, word vectors and
//! taxonomies.

mod embeddings;
mod features;
mod qa;
mod taxonomy;

use std::fs;
use std::path::{Path, PathBuf};

pub use embeddings::{load_embeddings, parse_embeddings};
pub use features::{
    load_features, read_features_binary, read_features_tsv, save_features, write_features_binary, write_features_tsv,
    FeatureFormat,
};
pub use qa::{
    load_daquar_txt, load_qa, load_qa_jsonl, load_references, parse_daquar, parse_qa_jsonl, write_qa_jsonl, QaFormat,
    ReferenceRecord,
};
pub use taxonomy::{load_taxonomy, parse_edges, parse_word_map};

use crate::error::{AynError, Result};

/// Environment variable naming the directory that relative input paths fall
/// back to when they do not exist under the working directory.
pub const DATA_DIR_ENV: &str = "AYN_DATA_DIR";

pub fn resolve_input(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

pub fn read_text(path: &Path) -> Result<String> {
    let path = resolve_input(path);
    fs::read_to_string(&path).map_err(|e| AynError::io(path, e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let path = resolve_input(path);
    fs::read(&path).map_err(|e| AynError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AynError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| AynError::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AynError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| AynError::io(path, e))
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::glorot_uniform;
use crate::tape::{Tape, Var};
use crate::tensor::{ParamId, ParamStore, Tensor};

pub const UNK: &str = "<unk>";

/// Word → row index map. Row 0 is always the reserved unknown-word token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(words: Vec<String>) -> Self {
        let mut v = Vocabulary::new();
        for w in words {
            v.insert(&w);
        }
        v
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.words
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut index = BTreeMap::new();
        index.insert(UNK.to_string(), 0);
        Self {
            words: alloc::vec![UNK.to_string()],
            index,
        }
    }

    /// Vocabulary over every distinct token, in first-seen order.
    pub fn from_tokens<'a, I, S>(sentences: I) -> Self
    where
        I: IntoIterator<Item = &'a S>,
        S: AsRef<[String]> + 'a + ?Sized,
    {
        let mut v = Self::new();
        for s in sentences {
            for w in s.as_ref() {
                v.insert(w);
            }
        }
        v
    }

    pub fn insert(&mut self, word: &str) -> usize {
        if let Some(&i) = self.index.get(word) {
            return i;
        }
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), self.words.len() - 1);
        self.words.len() - 1
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Row for `word`, falling back to the unknown-word row.
    pub fn lookup(&self, word: &str) -> usize {
        self.get(word).unwrap_or(0)
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.words.get(index).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Externally trained word vectors (e.g. GloVe) keyed by word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PretrainedEmbeddings {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl PretrainedEmbeddings {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::precondition("embedding dimension must be positive"));
        }
        Ok(Self {
            dim,
            vectors: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::shape(
                "PretrainedEmbeddings::insert",
                &[self.dim],
                &[vector.len()],
            ));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("pretrained embedding"));
        }
        self.vectors.insert(word.to_string(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Keeps only the listed words.
    pub fn retain_words<'a>(&mut self, keep: impl IntoIterator<Item = &'a str>) {
        let keep: alloc::collections::BTreeSet<&str> = keep.into_iter().collect();
        self.vectors.retain(|k, _| keep.contains(k.as_str()));
    }

    /// Sum (or mean) of the vectors of known tokens; unknown tokens are skipped.
    pub fn bag_of_words(&self, tokens: &[String], mean: bool) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dim];
        let mut n = 0usize;
        for v in tokens.iter().filter_map(|t| self.get(t)) {
            out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
            n += 1;
        }
        if mean && n > 0 {
            out.iter_mut().for_each(|o| *o /= n as f64);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingMode {
    Learned,
    PretrainedFrozen,
    PretrainedFinetuned,
}

/// Word embedding matrix `|V| × d` stored in a [`ParamStore`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub vocab: Vocabulary,
    pub weights: ParamId,
    pub dim: usize,
    pub mode: EmbeddingMode,
}

impl EmbeddingTable {
    pub fn learned<R: Rng + ?Sized>(
        store: &mut ParamStore,
        vocab: Vocabulary,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::precondition("embedding dimension must be positive"));
        }
        let weights = store.add("embedding", glorot_uniform(rng, vocab.len(), dim));
        Ok(Self {
            vocab,
            weights,
            dim,
            mode: EmbeddingMode::Learned,
        })
    }

    /// Extends `vocab` with every pretrained word. Rows of pretrained words are
    /// copied; the remaining rows (including the unknown token) are random.
    pub fn pretrained<R: Rng + ?Sized>(
        store: &mut ParamStore,
        mut vocab: Vocabulary,
        pretrained: &PretrainedEmbeddings,
        mode: EmbeddingMode,
        rng: &mut R,
    ) -> Result<Self> {
        if mode == EmbeddingMode::Learned {
            return Self::learned(store, vocab, pretrained.dim(), rng);
        }
        for (w, _) in pretrained.iter() {
            vocab.insert(w);
        }
        let dim = pretrained.dim();
        let random = glorot_uniform(rng, vocab.len(), dim);
        let mut data = random.data().to_vec();
        for (i, w) in vocab.words().iter().enumerate() {
            if let Some(v) = pretrained.get(w) {
                data[i * dim..(i + 1) * dim].copy_from_slice(v);
            }
        }
        let tensor = Tensor::matrix(vocab.len(), dim, data)?;
        let weights = store.add_with("embedding", tensor, mode == EmbeddingMode::PretrainedFinetuned);
        Ok(Self {
            vocab,
            weights,
            dim,
            mode,
        })
    }

    /// One `d`-vector per token; unknown words use the reserved row.
    pub fn embed(&self, tape: &mut Tape<'_>, tokens: &[String]) -> Result<Vec<Var>> {
        if tokens.is_empty() {
            return Err(Error::Empty("question tokens"));
        }
        let w = tape.param(self.weights);
        tokens.iter().map(|t| tape.row(w, self.vocab.lookup(t))).collect()
    }

    pub fn embed_index(&self, tape: &mut Tape<'_>, index: usize) -> Result<Var> {
        let w = tape.param(self.weights);
        tape.row(w, index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::seeded;
    use alloc::vec;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn identity_embedding_gives_one_hot_rows() {
        let mut store = ParamStore::new();
        let vocab = Vocabulary::from(vec!["w0".to_string(), "w1".to_string(), "w2".to_string()]);
        let mut table = EmbeddingTable::learned(&mut store, vocab, 4, &mut seeded(0)).unwrap();
        let mut eye = vec![0.0; 16];
        (0..4).for_each(|i| eye[i * 4 + i] = 1.0);
        *store.get_mut(table.weights) = Tensor::matrix(4, 4, eye).unwrap();
        table.mode = EmbeddingMode::Learned;
        let mut tape = Tape::new(&store);
        let rows = table.embed(&mut tape, &toks("w0 w2")).unwrap();
        // row 0 is <unk>, so w0 → 1, w2 → 3
        assert_eq!(tape.value(rows[0]), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(tape.value(rows[1]), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn unknown_word_maps_to_unk_row() {
        let mut store = ParamStore::new();
        let vocab = Vocabulary::from(vec!["cat".to_string()]);
        let table = EmbeddingTable::learned(&mut store, vocab, 3, &mut seeded(1)).unwrap();
        let mut tape = Tape::new(&store);
        let rows = table.embed(&mut tape, &toks("zebra")).unwrap();
        assert_eq!(tape.value(rows[0]), &store.get(table.weights).data()[0..3]);
        assert!(matches!(table.embed(&mut tape, &[]), Err(Error::Empty(_))));
    }

    #[test]
    fn pretrained_only_word_uses_its_vector() {
        let mut store = ParamStore::new();
        let mut pre = PretrainedEmbeddings::new(2).unwrap();
        pre.insert("sofa", vec![0.25, -0.5]).unwrap();
        let vocab = Vocabulary::from(vec!["chair".to_string()]);
        let table =
            EmbeddingTable::pretrained(&mut store, vocab, &pre, EmbeddingMode::PretrainedFrozen, &mut seeded(2))
                .unwrap();
        let mut tape = Tape::new(&store);
        let rows = table.embed(&mut tape, &toks("sofa")).unwrap();
        assert_eq!(tape.value(rows[0]), &[0.25, -0.5]);
        assert!(!store.param(table.weights).trainable);
    }

    #[test]
    fn vocabulary_keeps_first_seen_order() {
        let v = Vocabulary::from_tokens([&toks("a b a c")]);
        assert_eq!(v.words(), &["<unk>", "a", "b", "c"]);
        assert_eq!(v.lookup("c"), 3);
        assert_eq!(v.lookup("zzz"), 0);
    }
}

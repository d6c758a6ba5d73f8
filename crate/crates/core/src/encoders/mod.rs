//! Question encoders Ψ(q): bag-of-words, multi-view CNN, LSTM and GRU.

pub mod cnn;
pub mod embedding;
pub mod gru;
pub mod lstm;

use serde::{Deserialize, Serialize};

pub use cnn::{Aggregation, ConvActivation, TextCnn};
pub use embedding::{EmbeddingMode, EmbeddingTable, PretrainedEmbeddings, Vocabulary, UNK};
pub use gru::GruCell;
pub use lstm::{LstmCell, LstmState};

use crate::error::{Error, Result};
use crate::tape::{Tape, Var};

/// Columnwise sum of the embedded tokens.
pub fn encode_bow(tape: &mut Tape<'_>, embedded: &[Var]) -> Result<Var> {
    if embedded.is_empty() {
        return Err(Error::Empty("BOW input sequence"));
    }
    sum_pool(tape, embedded)
}

/// Sum of vectors accumulated in a canonical (value-sorted) order, so any
/// permutation of `parts` yields a bit-identical result.
pub fn sum_pool(tape: &mut Tape<'_>, parts: &[Var]) -> Result<Var> {
    let mut sorted = parts.to_vec();
    sorted.sort_by(|&a, &b| {
        let (va, vb) = (tape.value(a), tape.value(b));
        va.iter()
            .zip(vb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    tape.sum_vecs(&sorted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QuestionEncoder {
    Bow { dim: usize },
    Cnn(TextCnn),
    Lstm(LstmCell),
    Gru(GruCell),
}

impl QuestionEncoder {
    pub fn output_dim(&self) -> usize {
        match self {
            QuestionEncoder::Bow { dim } => *dim,
            QuestionEncoder::Cnn(c) => c.output_dim(),
            QuestionEncoder::Lstm(c) => c.hidden_dim,
            QuestionEncoder::Gru(c) => c.hidden_dim,
        }
    }

    /// Ψ(q) for an already embedded token sequence. Recurrent encoders return
    /// the hidden state after the last token.
    pub fn encode(&self, tape: &mut Tape<'_>, embedded: &[Var]) -> Result<Var> {
        match self {
            QuestionEncoder::Bow { .. } => encode_bow(tape, embedded),
            QuestionEncoder::Cnn(c) => c.encode(tape, embedded),
            QuestionEncoder::Lstm(c) => Ok(c.unroll(tape, embedded)?.h),
            QuestionEncoder::Gru(c) => c.unroll(tape, embedded),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::seeded;
    use crate::tensor::{ParamStore, Tensor};
    use alloc::string::String;
    use alloc::vec;
    use alloc::vec::Vec;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn bow_of_identity_embeddings_is_a_histogram() {
        let mut store = ParamStore::new();
        let vocab = Vocabulary::from(toks("a b c"));
        let table = EmbeddingTable::learned(&mut store, vocab, 4, &mut seeded(0)).unwrap();
        let mut eye = vec![0.0; 16];
        (0..4).for_each(|i| eye[i * 4 + i] = 1.0);
        *store.get_mut(table.weights) = Tensor::matrix(4, 4, eye).unwrap();
        let mut t = Tape::new(&store);
        let e = table.embed(&mut t, &toks("a c a b a")).unwrap();
        let psi = encode_bow(&mut t, &e).unwrap();
        assert_eq!(t.value(psi), &[0.0, 3.0, 1.0, 1.0]);

        let single = table.embed(&mut t, &toks("c")).unwrap();
        let psi = encode_bow(&mut t, &single).unwrap();
        assert_eq!(t.value(psi), t.value(single[0]));
    }

    #[test]
    fn bow_cannot_tell_swapped_arguments_apart() {
        let mut store = ParamStore::new();
        let q1 = toks("red chair left of sofa");
        let q2 = toks("red sofa left of chair");
        let table = EmbeddingTable::learned(&mut store, Vocabulary::from_tokens([&q1]), 6, &mut seeded(4)).unwrap();
        let mut t = Tape::new(&store);
        let e1 = table.embed(&mut t, &q1).unwrap();
        let e2 = table.embed(&mut t, &q2).unwrap();
        let a = encode_bow(&mut t, &e1).unwrap();
        let b = encode_bow(&mut t, &e2).unwrap();
        assert_eq!(t.value(a), t.value(b));
    }

    #[test]
    fn zero_lstm_encodes_to_zero() {
        let mut store = ParamStore::new();
        let q = toks("what is this");
        let table = EmbeddingTable::learned(&mut store, Vocabulary::from_tokens([&q]), 3, &mut seeded(1)).unwrap();
        let cell = LstmCell::new(&mut store, "lstm", 3, 4, &mut seeded(2)).unwrap();
        let enc = QuestionEncoder::Lstm(cell);
        for (id, p) in store.iter_mut() {
            if id != table.weights {
                p.tensor.data_mut().iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let mut t = Tape::new(&store);
        let e = table.embed(&mut t, &q).unwrap();
        let psi = enc.encode(&mut t, &e).unwrap();
        assert_eq!(t.value(psi), &[0.0; 4]);
    }
}

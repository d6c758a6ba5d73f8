//! Multimodal fusion C(Ψ, Φ) of the question and visual encodings.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::glorot_uniform;
use crate::tape::{Tape, Var};
use crate::tensor::{ParamId, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// `[Ψ ; Φ]`; the classifier weights split into question and visual blocks.
    Concat,
    /// `Ψ ⊙ (W_ve Φ)`
    Multiply,
    /// `Ψ + W_ve Φ`
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fusion {
    pub mode: FusionMode,
    /// `|Ψ| × |Φ|`, present for multiply and sum.
    pub visual_embedding: Option<ParamId>,
    pub normalize_visual: bool,
    pub question_dim: usize,
    pub visual_dim: usize,
}

impl Fusion {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        mode: FusionMode,
        question_dim: usize,
        visual_dim: usize,
        normalize_visual: bool,
        rng: &mut R,
    ) -> Result<Self> {
        if question_dim == 0 || visual_dim == 0 {
            return Err(Error::precondition("fusion dimensions must be positive"));
        }
        let visual_embedding = match mode {
            FusionMode::Concat => None,
            FusionMode::Multiply | FusionMode::Sum => {
                Some(store.add("fusion.visual_embedding", glorot_uniform(rng, question_dim, visual_dim)))
            }
        };
        Ok(Self {
            mode,
            visual_embedding,
            normalize_visual,
            question_dim,
            visual_dim,
        })
    }

    pub fn output_dim(&self) -> usize {
        match self.mode {
            FusionMode::Concat => self.question_dim + self.visual_dim,
            FusionMode::Multiply | FusionMode::Sum => self.question_dim,
        }
    }

    pub fn fuse(&self, tape: &mut Tape<'_>, question: Var, visual: Var) -> Result<Var> {
        if tape.shape(question) != [self.question_dim] {
            return Err(Error::shape(
                "fuse question",
                &[self.question_dim],
                tape.shape(question),
            ));
        }
        if tape.shape(visual) != [self.visual_dim] {
            return Err(Error::shape("fuse visual", &[self.visual_dim], tape.shape(visual)));
        }
        let visual = if self.normalize_visual {
            tape.l2_normalize(visual)?
        } else {
            visual
        };
        match (self.mode, self.visual_embedding) {
            (FusionMode::Concat, _) => tape.concat(&[question, visual]),
            (mode, Some(w)) => {
                let w = tape.param(w);
                let projected = tape.matvec(w, visual)?;
                if mode == FusionMode::Multiply {
                    tape.mul(question, projected)
                } else {
                    tape.add(question, projected)
                }
            }
            (_, None) => Err(Error::precondition("multiply/sum fusion needs a visual embedding")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::seeded;
    use crate::tensor::Tensor;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn identity_fusion(mode: FusionMode, normalize: bool) -> (ParamStore, Fusion) {
        let mut store = ParamStore::new();
        let f = Fusion::new(&mut store, mode, 2, 2, normalize, &mut seeded(0)).unwrap();
        if let Some(w) = f.visual_embedding {
            *store.get_mut(w) = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        }
        (store, f)
    }

    fn run(mode: FusionMode, normalize: bool, q: [f64; 2], v: [f64; 2]) -> alloc::vec::Vec<f64> {
        let (store, f) = identity_fusion(mode, normalize);
        let mut t = Tape::new(&store);
        let q = t.input(q.to_vec()).unwrap();
        let v = t.input(v.to_vec()).unwrap();
        let out = f.fuse(&mut t, q, v).unwrap();
        t.value(out).to_vec()
    }

    #[test]
    fn identity_projection_cases() {
        assert_eq!(run(FusionMode::Sum, false, [1.0, 2.0], [3.0, 4.0]), vec![4.0, 6.0]);
        assert_eq!(run(FusionMode::Multiply, false, [1.0, 2.0], [3.0, 4.0]), vec![3.0, 8.0]);
        assert_eq!(
            run(FusionMode::Concat, false, [1.0, 2.0], [3.0, 4.0]),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        let n = run(FusionMode::Sum, true, [0.0, 0.0], [3.0, 4.0]);
        assert_abs_diff_eq!(n[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(n[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn zero_visual_vector() {
        assert_eq!(run(FusionMode::Multiply, true, [1.5, -2.0], [0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(run(FusionMode::Sum, true, [1.5, -2.0], [0.0, 0.0]), vec![1.5, -2.0]);
    }

    #[test]
    fn mismatched_visual_width_is_rejected() {
        let (store, f) = identity_fusion(FusionMode::Sum, false);
        let mut t = Tape::new(&store);
        let q = t.input(vec![1.0, 2.0]).unwrap();
        let v = t.input(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(f.fuse(&mut t, q, v), Err(Error::Shape { .. })));
    }
}

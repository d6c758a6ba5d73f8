//! First-order optimizers operating on the gradient buffers of a [`ParamStore`].

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OptimizerKind {
    SgdMomentum { lr: f64, momentum: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub const fn adam_default() -> Self {
        OptimizerKind::Adam {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub const fn sgd(lr: f64, momentum: f64) -> Self {
        OptimizerKind::SgdMomentum { lr, momentum }
    }
}

impl Default for OptimizerKind {
    fn default() -> Self {
        Self::adam_default()
    }
}

/// Optimizer hyperparameters plus moment buffers, one set per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub step: u64,
    /// Velocity for momentum, first moment for Adam.
    first: Vec<Vec<f64>>,
    /// Second moment (Adam only).
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, params: &ParamStore) -> Self {
        let zeros = || -> Vec<Vec<f64>> { params.iter().map(|(_, p)| vec![0.0; p.tensor.numel()]).collect() };
        let second = match kind {
            OptimizerKind::Adam { .. } => zeros(),
            OptimizerKind::SgdMomentum { .. } => Vec::new(),
        };
        Self {
            kind,
            step: 0,
            first: zeros(),
            second,
        }
    }

    /// Applies one update from the accumulated gradients. Parameters without a
    /// gradient buffer or marked frozen are left untouched. Gradients are not
    /// cleared.
    pub fn step(&mut self, params: &mut ParamStore) -> Result<()> {
        if self.first.len() != params.len() {
            return Err(Error::shape("optimizer_step", &[self.first.len()], &[params.len()]));
        }
        for (id, p) in params.iter() {
            if self.first[id.0].len() != p.tensor.numel() {
                return Err(Error::shape(
                    "optimizer_step",
                    &[self.first[id.0].len()],
                    &[p.tensor.numel()],
                ));
            }
            if let Some(g) = p.tensor.grad() {
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("optimizer_step gradient"));
                }
            }
        }
        self.step += 1;
        let t = self.step as f64;
        for (id, p) in params.iter_mut() {
            if !p.trainable {
                continue;
            }
            let Some(grad) = p.tensor.grad().map(<[f64]>::to_vec) else {
                continue;
            };
            let data = p.tensor.data_mut();
            match self.kind {
                OptimizerKind::SgdMomentum { lr, momentum } => {
                    let vel = &mut self.first[id.0];
                    for ((w, v), g) in data.iter_mut().zip(vel.iter_mut()).zip(&grad) {
                        *v = momentum * *v + g;
                        *w -= lr * *v;
                    }
                }
                OptimizerKind::Adam { lr, beta1, beta2, eps } => {
                    let c1 = 1.0 - libm::pow(beta1, t);
                    let c2 = 1.0 - libm::pow(beta2, t);
                    let m = &mut self.first[id.0];
                    let v = &mut self.second[id.0];
                    for i in 0..data.len() {
                        let g = grad[i];
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                        let m_hat = m[i] / c1;
                        let v_hat = v[i] / c2;
                        data[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use approx::assert_abs_diff_eq;

    fn store_with_grad(w: Vec<f64>, g: Vec<f64>) -> ParamStore {
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::vector(w).unwrap());
        s.get_mut(id).accumulate_grad(&g).unwrap();
        s
    }

    #[test]
    fn adam_zero_gradient_is_fixed_point() {
        let mut s = store_with_grad(vec![0.3, -1.2], vec![0.0, 0.0]);
        let mut opt = OptimizerState::new(OptimizerKind::adam_default(), &s);
        for _ in 0..25 {
            opt.step(&mut s).unwrap();
        }
        assert_eq!(s.get(crate::tensor::ParamId(0)).data(), &[0.3, -1.2]);
        assert_eq!(opt.step, 25);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut s = store_with_grad(vec![1.0, 1.0], vec![0.5, -2.0]);
        let mut opt = OptimizerState::new(OptimizerKind::adam_default(), &s);
        opt.step(&mut s).unwrap();
        // m̂ = g, v̂ = g², so the update is lr·g/(|g|+ε).
        let d = s.get(crate::tensor::ParamId(0)).data();
        assert_abs_diff_eq!(d[0], 1.0 - 1e-3 * 0.5 / (0.5 + 1e-8), epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 1.0 + 1e-3 * 2.0 / (2.0 + 1e-8), epsilon = 1e-15);
        assert_abs_diff_eq!(1.0 - d[0], 1e-3, epsilon = 1e-10);
    }

    #[test]
    fn momentum_free_sgd_is_gradient_descent() {
        let mut s = store_with_grad(vec![1.0], vec![4.0]);
        let mut opt = OptimizerState::new(OptimizerKind::sgd(0.1, 0.0), &s);
        opt.step(&mut s).unwrap();
        opt.step(&mut s).unwrap();
        assert_abs_diff_eq!(s.get(crate::tensor::ParamId(0)).data()[0], 1.0 - 0.8, epsilon = 1e-15);
    }

    #[test]
    fn rejects_mismatched_store() {
        let s = store_with_grad(vec![1.0], vec![1.0]);
        let mut opt = OptimizerState::new(OptimizerKind::adam_default(), &s);
        let mut other = store_with_grad(vec![1.0, 2.0], vec![1.0, 1.0]);
        assert!(matches!(opt.step(&mut other), Err(Error::Shape { .. })));
        assert_eq!(opt.step, 0);
    }

    #[test]
    fn frozen_params_do_not_move() {
        let mut s = store_with_grad(vec![1.0], vec![4.0]);
        s.set_trainable(crate::tensor::ParamId(0), false);
        let mut opt = OptimizerState::new(OptimizerKind::sgd(0.1, 0.9), &s);
        opt.step(&mut s).unwrap();
        assert_eq!(s.get(crate::tensor::ParamId(0)).data(), &[1.0]);
    }
}

//! Scalar and vector helpers shared by the tape and the non-neural code.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Norms below this are treated as zero by [`l2_normalize`].
pub const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    Sigmoid,
    Tanh,
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + libm::exp(-v))
    } else {
        let e = libm::exp(v);
        e / (1.0 + e)
    }
}

#[inline]
pub fn tanh(v: f64) -> f64 {
    libm::tanh(v)
}

impl Nonlinearity {
    #[inline]
    pub fn eval(self, v: f64) -> f64 {
        match self {
            Nonlinearity::Sigmoid => sigmoid(v),
            Nonlinearity::Tanh => tanh(v),
        }
    }
}

/// Elementwise σ or φ over a tensor. Non-finite inputs are rejected.
pub fn apply_nonlinearity(kind: Nonlinearity, x: &Tensor) -> Result<Tensor> {
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("apply_nonlinearity"));
    }
    let data = x.data().iter().map(|&v| kind.eval(v)).collect();
    Tensor::new(x.shape().to_vec(), data)
}

pub fn l2_norm(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum())
}

/// Divides by the L2 norm; (near-)zero vectors map to the zero vector.
pub fn l2_normalize(x: &[f64]) -> Vec<f64> {
    let n = l2_norm(x);
    if n < NORM_EPS {
        return alloc::vec![0.0; x.len()];
    }
    x.iter().map(|v| v / n).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity; defined as 0 when either side is a zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na < NORM_EPS || nb < NORM_EPS {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

pub fn log_sum_exp(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + libm::log(x.iter().map(|v| libm::exp(v - max)).sum::<f64>())
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| libm::exp(v - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in x.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn nonlinearity_fixed_points() {
        let zero = Tensor::vector(vec![0.0]).unwrap();
        assert_eq!(apply_nonlinearity(Nonlinearity::Sigmoid, &zero).unwrap().data(), &[0.5]);
        assert_eq!(apply_nonlinearity(Nonlinearity::Tanh, &zero).unwrap().data(), &[0.0]);
        let half = Tensor::vector(vec![0.5]).unwrap();
        let t = apply_nonlinearity(Nonlinearity::Tanh, &half).unwrap();
        // 2σ(1) − 1 = 2/(1+e^−1) − 1
        assert_abs_diff_eq!(t.data()[0], 0.46212, epsilon = 1e-5);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn l2_normalize_cases() {
        let v = l2_normalize(&[3.0, 4.0]);
        assert_abs_diff_eq!(v[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.8, epsilon = 1e-15);
        assert_eq!(l2_normalize(&[1.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(l2_normalize(&[0.0, 0.0, 0.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 1.0, 1.0]), Some(0));
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax(&[]), None);
    }

    #[test]
    fn cosine_of_zero_is_zero() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
    }
}

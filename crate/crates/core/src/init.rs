//! Seeded randomness and weight initialization.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor;

/// The single generator used for every random decision in a run.
pub type SeededRng = ChaCha8Rng;

/// Recorded in run metadata so artifacts name the stream that produced them.
pub const RNG_NAME: &str = "chacha8/rand_chacha-0.9";

/// Recorded alongside checkpoints.
pub const INIT_SCHEME: &str = "uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)); biases zero";

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows × cols` matrix drawn from `U(−a, a)` with `a = sqrt(6 / (rows + cols))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    let a = libm::sqrt(6.0 / (rows + cols) as f64);
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-a..a)).collect();
    Tensor::matrix(rows, cols, data).expect("positive extents")
}

pub fn zeros_vector(n: usize) -> Tensor {
    Tensor::vector(vec![0.0; n]).expect("positive extent")
}

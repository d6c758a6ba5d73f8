//! Encoder-fusion-decoder models for visual question answering, the
//! non-neural baselines, and the consensus evaluation metrics.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! anything touching the filesystem live in the `ayn` companion crate.

#![no_std]

extern crate alloc;

pub mod baselines;
pub mod data;
pub mod decoders;
pub mod encoders;
pub mod error;
pub mod fusion;
pub mod gradcheck;
pub mod init;
pub mod math;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod synthetic;
pub mod tape;
pub mod taxonomy;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tape::{Gradients, Tape, Var};
pub use tensor::{Param, ParamId, ParamStore, Tensor};

//! File formats, configuration, checkpoints, evaluation reports and the
//! command-line harness built on `ayn-core`.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use error::{AynError, Result};

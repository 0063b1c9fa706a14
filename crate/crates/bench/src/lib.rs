//! Experiment harness: manifests, drivers and CSV rendering.

pub mod commands;
pub mod error;
pub mod manifest;

pub use commands::{run, Output};
pub use error::{BenchError, Result};
pub use manifest::{Experiment, Manifest};

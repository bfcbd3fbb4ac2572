//! Experiment harness: named presets, module commands, run manifests.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod manifest;
pub mod modules;
pub mod parse;
pub mod presets;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use manifest::{compare_runs, run_preset, DiffReport, RunManifest};
pub use presets::Preset;

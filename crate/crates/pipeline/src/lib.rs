//! Configuration, caching and orchestration for the kicked-rotor experiments.
//!
//! Every target writes plain CSV files into a fresh run directory together
//! with `config.toml` (the resolved configuration) and `manifest.json`
//! (config hash, tool version, per-file SHA-256, per-target timings).

pub mod cache;
pub mod config;
pub mod error;
pub mod members;
pub mod output;
pub mod run;
pub mod targets;

pub use config::{ExperimentConfig, RawConfig};
pub use error::{PipelineError, Result};
pub use run::{run, RunManifest, RunOptions};
pub use targets::Target;

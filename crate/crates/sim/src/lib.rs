//! Experiment driver for the monitored qubit chain: configuration, output
//! formats, manifests and the per-experiment runners.

pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod manifest;
pub mod memory_loss;

pub use config::{ExperimentConfig, ExperimentKind, Overrides};
pub use error::{SimError, SimResult};
pub use experiments::{run_experiment, RunOutcome};

//! File formats, dataset IO, rendering and the staged pipeline around
//! `napaudit-core`.

#![forbid(unsafe_code)]

pub mod config;
pub mod dataset;
pub mod error;
pub mod imaging;
pub mod npy;
pub mod stages;
pub mod synth;

pub use config::{LoadedConfig, RunConfig};
pub use dataset::{ActivationDataset, LayerSpec};
pub use error::{AuditError, Result};
pub use stages::{Outcome, Pipeline, Stage};

//! Activity recognition from a single knee-angle channel.
//!
//! The crate covers the whole experiment: dataset loading and synthesis,
//! zero-phase filtering and windowing, statistical feature extraction,
//! six from-scratch classifiers, leave-one-subject-out cross-validation,
//! grid search, and timing comparisons between the raw-sample and
//! extracted-feature representations.
//!
//! The typical flow is `dataset` -> `signal` -> `features` ->
//! `classifiers` -> `evaluation`, with `report` serializing the results.

pub mod classifiers;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod report;
pub mod signal;

pub use config::{MedianMode, PipelineConfig, Representation};
pub use error::{Error, Result};

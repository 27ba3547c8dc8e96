//! Shot intent inference for cricket batters from pose time series.
//!
//! The crate covers the whole offline pipeline: pose CSV ingestion,
//! feature preprocessing, a small reverse-mode training engine, three
//! classifier kinds (motion-range forest, 1D CNN, LSTM), ordered
//! leave-pair-out cross-validation, shot segmentation from person
//! detections, and the match-statistics case study (weak labels,
//! region distributions, deviation metrics, wagon-wheel plots).
//!
//! Data-parallel loops (clip loading, CV splits) run on rayon when the
//! `parallel` feature is enabled and fall back to plain iteration
//! otherwise.

pub mod classifiers;
pub mod config;
pub mod container;
pub mod cv;
pub mod error;
pub mod exec;
pub mod metrics;
pub mod nn;
pub mod pose;
pub mod preprocess;
pub mod report;
pub mod seed;
pub mod segment;
pub mod svg;
pub mod synthetic;
pub mod weak;

pub use error::{Error, Result};

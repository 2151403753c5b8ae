//! File formats, configuration and experiment drivers around `isac-core`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod experiment;
pub mod metrics;
pub mod parallel;

pub use config::ExperimentConfig;
pub use dataset::{Dataset, DatasetSample};
pub use metrics::MetricRow;

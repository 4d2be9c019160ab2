//! Coreset selection by Jensen-Shannon divergence against class centers.
//!
//! Each training sample's hidden-layer embedding is turned into a
//! distribution with softmax, classes get a center distribution (the mean of
//! their members), and every sample is scored by the JSD to its own class
//! center. The core set keeps the samples whose score is nearest the average
//! score. Random, Moderate, k-center greedy and forgetting-count baselines
//! share the same [`SelectionResult`] contract, and [`trainer`] runs a small
//! classifier that reselects its core set on a fixed epoch schedule.

pub mod benchmark;
pub mod data;
pub mod divergence;
pub mod error;
pub mod metrics;
pub mod selection;
pub mod trainer;

pub use data::{
    core_set_size, generate_synthetic, load_dataset, load_selection, save_dataset, save_selection, FeatureDataset,
    Matrix, SelectionResult, SyntheticSpec,
};
pub use divergence::{jsd, kl, softmax, ProbabilityVector, ScoreTable};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use selection::{EpochTrace, Method, Selector};
pub use trainer::{ClassifierState, TrainConfig, TrainReport};

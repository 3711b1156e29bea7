//! Unsupervised patient subphenotyping.
//!
//! Clusters a case cohort on physiological features, validates the clusters
//! by cross-method agreement, expands them to the full population with a
//! classifier, and trains subgroup-specific outcome models.

pub mod cli;
pub mod cluster;
pub mod domain;
pub mod embed;
pub mod error;
pub mod ingest;
pub mod learn;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

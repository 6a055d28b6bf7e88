//! Multi-task sequence-labeling laboratory.
//!
//! Trains single-task and hard-parameter-sharing bi-LSTM taggers, extracts
//! dataset and learning-curve features for each task, and fits a
//! logistic-regression meta-learner that predicts whether pairing a main task
//! with an auxiliary task improves the main task's micro-F1.
//!
//! The pipeline, bottom-up:
//!
//! - [`nn`]: parameter tensors, bi-LSTM forward/backward, softmax heads, Adadelta.
//! - [`data`]: CoNLL-style ingestion, vocabularies, embeddings, synthetic HMM tasks.
//! - [`trainer`]: training loops, loss curves, micro-F1, the pairwise grid.
//! - [`features`]: the 14 per-task descriptors and 42-wide pair vectors.
//! - [`meta`]: meta-dataset, logistic regression, cross-validation, reports.
//! - [`config`]: the declarative experiment file.

pub mod config;
pub mod data;
mod error;
pub mod features;
pub mod meta;
pub mod nn;
mod seed;
pub mod trainer;

pub use error::{Error, Result};
pub use seed::derive_seed;

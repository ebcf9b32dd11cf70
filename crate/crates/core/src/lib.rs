//! Intent detection for short banking queries.
//!
//! The pipeline has three stages:
//!
//! 1. [`analyzers`] turn text into word, character or word-bounded character
//!    n-grams;
//! 2. [`vectorizer`] fits one TF-IDF block per analyzer and concatenates the
//!    L2-normalized blocks, each scaled by its own weight;
//! 3. [`linear_models`] train a one-vs-rest squared-hinge SVM (or logistic
//!    regression, e.g. over [`embeddings`] computed elsewhere).
//!
//! [`corpus`] reads labelled CSV/TSV files, [`evaluation`] scores
//! predictions, and [`experiments`] ties everything together into presets,
//! grid search and versioned model bundles.

pub mod analyzers;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod linear_models;
pub mod sparse;
pub mod vectorizer;

pub use error::{Error, ErrorClass, Result};

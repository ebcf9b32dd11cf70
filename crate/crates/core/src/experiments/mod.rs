//! Experiment configuration, presets, grid search and model persistence.

pub mod bundle;
pub mod config;
pub mod grid;
pub mod presets;
pub mod runner;
pub mod synthetic;

pub use bundle::{load_model, save_model, FittedFeatures, ModelBundle};
pub use config::{
    union_for_triple, DataConfig, ExperimentConfig, FeatureConfig, NgramInterpretation, NgramTriple,
};
pub use grid::{grid_search, GridResult, GridSpec, WeightCandidates};
pub use presets::{preset, preset_names, presets, Preset};
pub use runner::{
    evaluate_bundle, predict_records, run_experiment, score_records, train_bundle,
    ExperimentOutcome,
};

//! Synthetic benchmark suite: data-generating functions with known
//! interactions, pairwise ROC-AUC scoring, multi-trial experiments,
//! perturbation sweeps and feature crossing.

mod auc;
mod crossing;
mod experiment;
mod synthetic;

pub use auc::roc_auc;
pub use crossing::{bucketize, cross_features, DEFAULT_BUCKETS, MAX_CROSS_ORDER};
pub use experiment::{
    derive_seed, run_experiment, run_experiment_with, run_perturbation, run_trial, trim_extremes,
    ExperimentConfig, ExperimentReport, FunctionSummary, PerturbationReport, PerturbationRow,
    TrialResult,
};
pub use synthetic::{
    evaluate, feature_range, gen_synthetic, ground_truth_pairs, interaction_terms, parse_fid,
    GroundTruth, ALL_FUNCTIONS, NUM_FEATURES,
};

//! Persistence-based interaction detection for feed-forward ReLU networks.
//!
//! A trained network is read as a layered weighted DAG. Normalized weight
//! magnitudes define a descending filtration of that graph; the interval over
//! which a feature set alone feeds a unit that still reaches the outputs is
//! the set's persistence, and summing persistences gives an interaction
//! strength.
//!
//! - [`model`]: weight files, convolution flattening, per-sample activations.
//! - [`filtration`]: edge strengths, thresholds and boolean reachability.
//! - [`pid`]: the detection sweep, ranking, pairwise and saliency views,
//!   perturbation stability.
//! - [`data`]: tabular datasets with CSV I/O and contiguous splits.
//! - [`trainer`]: a small Adam/L1 MLP trainer for synthetic experiments.
//! - [`bench`]: synthetic functions, ground truth, ROC-AUC and experiment
//!   orchestration.

pub mod bench;
pub mod data;
pub mod error;
pub mod filtration;
pub mod model;
pub mod pid;
pub mod trainer;

pub use data::{DatasetSpec, FeatureKind};
pub use error::{PidError, Result};
pub use filtration::{build_filtration, connected, masks_at, Filtration, ReachabilityView};
pub use model::{load_network, save_network, NetworkSpec, WeightMatrix};
pub use pid::{
    detect, pairwise_strengths, rank, saliency, stability_check, DetectConfig,
    InteractionCandidate, PersistenceLedger, StabilityReport, TerminalDeath,
};
pub use trainer::{mse, train_mlp, TrainConfig, TrainLog};

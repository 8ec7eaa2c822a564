//! Metrics, the repeated-split experiment protocol and result reporting.

mod bundle;
mod config;
mod experiment;
mod leaderboard;
mod metrics;

pub use bundle::{load_predictions, BundleManifest, ModelBundle, BUNDLE_FILE, MODEL_FILE, PREDICTIONS_FILE};
pub use config::{ExperimentConfig, FeatureConfig, ModelConfig, VALID_COMBINATIONS};
pub use experiment::{
    clean_dataset, derive_seed, run_experiment, run_experiment_keeping, run_iteration, score_documents,
    ConfigSnapshot, ExperimentReport, FittedFeatures, IterationOutcome, IterationResult, Prediction, Resources,
    REPORT_SCHEMA_VERSION,
};
pub use leaderboard::{leaderboard, Leaderboard, LeaderboardRow};
pub use metrics::{auc, confusion, metrics, summarize, ConfusionMatrix, MetricSet};

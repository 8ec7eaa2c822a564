use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DEFAULT_MAX_DF, DEFAULT_MAX_LEN, DEFAULT_MAX_N, DEFAULT_MIN_DF};
use crate::models::{LogRegHyper, LstmHyper, SvmHyper};

pub const VALID_COMBINATIONS: &str = "tfidf or entity with logreg, mnb or svm; \
     embedding_mean with logreg or svm; embedding_sequence with lstm";

fn default_min_df() -> f64 {
    DEFAULT_MIN_DF
}
fn default_max_df() -> f64 {
    DEFAULT_MAX_DF
}
fn default_max_n() -> usize {
    DEFAULT_MAX_N
}
fn default_min_count() -> u64 {
    1
}
fn default_max_len() -> usize {
    DEFAULT_MAX_LEN
}
fn default_alpha() -> f64 {
    1.0
}
fn default_iterations() -> usize {
    100
}
fn default_train_fraction() -> f64 {
    0.8
}
fn default_validation_fraction() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureConfig {
    Tfidf {
        #[serde(default = "default_min_df")]
        min_df: f64,
        #[serde(default = "default_max_df")]
        max_df: f64,
    },
    Entity {
        /// Term list; the bundled biomedical lexicon when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lexicon: Option<PathBuf>,
        #[serde(default = "default_max_n")]
        max_n: usize,
        #[serde(default = "default_min_count")]
        min_count: u64,
    },
    EmbeddingMean {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embeddings: Option<PathBuf>,
    },
    EmbeddingSequence {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embeddings: Option<PathBuf>,
        #[serde(default = "default_max_len")]
        max_len: usize,
    },
}

impl FeatureConfig {
    pub fn tfidf() -> Self {
        FeatureConfig::Tfidf {
            min_df: DEFAULT_MIN_DF,
            max_df: DEFAULT_MAX_DF,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            FeatureConfig::Tfidf { .. } => "tfidf",
            FeatureConfig::Entity { .. } => "entity",
            FeatureConfig::EmbeddingMean { .. } => "embedding_mean",
            FeatureConfig::EmbeddingSequence { .. } => "embedding_sequence",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            FeatureConfig::Tfidf { .. } => "TF-IDF",
            FeatureConfig::Entity { .. } => "Entity n-grams",
            FeatureConfig::EmbeddingMean { .. } => "Mean word embeddings",
            FeatureConfig::EmbeddingSequence { .. } => "Word embeddings",
        }
    }

    pub fn embeddings_path(&self) -> Option<&Path> {
        match self {
            FeatureConfig::EmbeddingMean { embeddings } | FeatureConfig::EmbeddingSequence { embeddings, .. } => {
                embeddings.as_deref()
            }
            _ => None,
        }
    }

    pub fn uses_embeddings(&self) -> bool {
        matches!(
            self,
            FeatureConfig::EmbeddingMean { .. } | FeatureConfig::EmbeddingSequence { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Logreg(LogRegHyper),
    Mnb {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Svm(SvmHyper),
    Lstm(LstmHyper),
}

impl ModelConfig {
    pub fn family(&self) -> &'static str {
        match self {
            ModelConfig::Logreg(_) => "logreg",
            ModelConfig::Mnb { .. } => "mnb",
            ModelConfig::Svm(_) => "svm",
            ModelConfig::Lstm(_) => "lstm",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            ModelConfig::Logreg(_) => "LR",
            ModelConfig::Mnb { .. } => "MNB",
            ModelConfig::Svm(_) => "SVM",
            ModelConfig::Lstm(_) => "LSTM",
        }
    }

    /// Copy with the training seed replaced.
    pub fn with_seed(&self, seed: u64) -> ModelConfig {
        match self {
            ModelConfig::Logreg(h) => ModelConfig::Logreg(LogRegHyper { seed, ..h.clone() }),
            ModelConfig::Svm(h) => ModelConfig::Svm(SvmHyper { seed, ..h.clone() }),
            ModelConfig::Lstm(h) => ModelConfig::Lstm(LstmHyper { seed, ..h.clone() }),
            ModelConfig::Mnb { alpha } => ModelConfig::Mnb { alpha: *alpha },
        }
    }
}

/// Everything that determines an experiment's outcome, plus where to put
/// the results. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// Stop-word file; the bundled English list when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    pub features: FeatureConfig,
    pub model: ModelConfig,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Share of train pairs held out for LSTM early stopping.
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    /// Parallel iterations; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(features: FeatureConfig, model: ModelConfig) -> Self {
        ExperimentConfig {
            name: None,
            dataset: None,
            stopwords: None,
            features,
            model,
            iterations: default_iterations(),
            base_seed: 0,
            train_fraction: default_train_fraction(),
            validation_fraction: default_validation_fraction(),
            workers: 0,
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// `"<MODEL> + <FEATURES>"` unless a name was configured.
    pub fn display_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{} + {}", self.model.display_name(), self.features.display_name()))
    }

    /// Rejects invalid settings before any work is done.
    pub fn validate(&self) -> Result<()> {
        use FeatureConfig as F;
        use ModelConfig as M;
        let valid = matches!(
            (&self.features, &self.model),
            (F::Tfidf { .. } | F::Entity { .. }, M::Logreg(_) | M::Mnb { .. } | M::Svm(_))
                | (F::EmbeddingMean { .. }, M::Logreg(_) | M::Svm(_))
                | (F::EmbeddingSequence { .. }, M::Lstm(_))
        );
        if !valid {
            let why = match (&self.features, &self.model) {
                (F::EmbeddingMean { .. }, M::Mnb { .. }) => {
                    " (naive Bayes needs non-negative counts and embeddings are signed)"
                }
                (_, M::Lstm(_)) => " (the LSTM reads token sequences)",
                (F::EmbeddingSequence { .. }, _) => " (sequences feed only the LSTM)",
                _ => "",
            };
            return Err(Error::Config(format!(
                "invalid combination {} + {}{why}; valid combinations: {VALID_COMBINATIONS}",
                self.model.family(),
                self.features.family()
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if matches!(self.model, M::Lstm(_)) && !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation_fraction must lie in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        match &self.features {
            F::Tfidf { min_df, max_df } => {
                if !(0.0 <= *min_df && min_df < max_df && *max_df <= 1.0) {
                    return Err(Error::Config(format!(
                        "document-frequency band [{min_df}, {max_df}] must satisfy 0 <= min < max <= 1"
                    )));
                }
            }
            F::Entity { max_n, .. } if *max_n == 0 => {
                return Err(Error::Config("max_n must be at least 1".into()));
            }
            F::EmbeddingSequence { max_len, .. } if *max_len == 0 => {
                return Err(Error::Config("max_len must be at least 1".into()));
            }
            _ => {}
        }
        if let M::Mnb { alpha } = self.model {
            if !(alpha > 0.0) {
                return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
            }
        }
        Ok(())
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{FittedFeatures, IterationOutcome, Prediction};
use crate::error::{Error, Result};
use crate::models::{load_model, save_model, TrainedModel};
use crate::textprep::StopWordList;

pub const BUNDLE_FILE: &str = "bundle.json";
pub const MODEL_FILE: &str = "model.bin";
pub const PREDICTIONS_FILE: &str = "predictions.json";

/// Description of a saved iteration: how to featurize text and which
/// records were held out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub name: String,
    pub iteration: usize,
    pub split_seed: u64,
    pub stopwords: StopWordList,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    pub features: FittedFeatures,
    pub test_ids: Vec<String>,
}

/// A trained model with its feature state and test-split predictions.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub manifest: BundleManifest,
    pub model: TrainedModel,
    pub predictions: Option<Vec<Prediction>>,
}

impl ModelBundle {
    pub fn from_outcome(
        name: impl Into<String>,
        outcome: IterationOutcome,
        stopwords: StopWordList,
        embeddings: Option<PathBuf>,
    ) -> Self {
        ModelBundle {
            manifest: BundleManifest {
                name: name.into(),
                iteration: outcome.result.iteration,
                split_seed: outcome.result.split_seed,
                stopwords,
                embeddings,
                features: outcome.features,
                test_ids: outcome.split.test_ids,
            },
            model: outcome.model,
            predictions: Some(outcome.predictions),
        }
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join(BUNDLE_FILE), &self.manifest)?;
        save_model(&self.model, dir.join(MODEL_FILE))?;
        if let Some(p) = &self.predictions {
            write_json(&dir.join(PREDICTIONS_FILE), p)?;
        }
        Ok(())
    }

    /// Loads manifest and model; predictions are optional.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest_path = dir.join(BUNDLE_FILE);
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: BundleManifest =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", manifest_path.display())))?;
        let model = load_model(dir.join(MODEL_FILE))?;
        let pred_path = dir.join(PREDICTIONS_FILE);
        let predictions = if pred_path.exists() {
            Some(load_predictions(&pred_path)?)
        } else {
            None
        };
        Ok(ModelBundle {
            manifest,
            model,
            predictions,
        })
    }
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, FeatureConfig, ModelConfig};
use super::metrics::{auc, confusion, metrics, summarize, ConfusionMatrix, MetricSet};
use crate::corpus::{Label, PairedDataset, SplitAssignment};
use crate::error::{Error, Result};
use crate::features::{
    embed_mean, DenseVector, EmbeddedDoc, EmbeddingTable, EntityGramVocabulary, FeatureVector, Lexicon, SparseVector,
    TfidfVocabulary,
};
use crate::models::{label_from_probability, LogRegModel, LstmModel, MnbModel, SvmModel, TrainedModel};
use crate::textprep::{clean, CleanDocument, StopWordList};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Seed streams derived from an iteration seed.
const MODEL_STREAM: u64 = 1;
const VALIDATION_STREAM: u64 = 2;

/// SplitMix64 finalizer over `seed + stream`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Loaded side inputs of an experiment.
#[derive(Debug, Clone)]
pub struct Resources {
    pub stopwords: StopWordList,
    pub lexicon: Lexicon,
    pub embeddings: Option<Arc<EmbeddingTable>>,
}

impl Default for Resources {
    fn default() -> Self {
        Resources {
            stopwords: StopWordList::english(),
            lexicon: Lexicon::biomedical(),
            embeddings: None,
        }
    }
}

impl Resources {
    /// Reads every file the configuration references.
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        let stopwords = match &config.stopwords {
            Some(p) => StopWordList::from_file(p)?,
            None => StopWordList::english(),
        };
        let lexicon = match &config.features {
            FeatureConfig::Entity { lexicon: Some(p), .. } => Lexicon::from_file(p, &stopwords)?,
            _ => Lexicon::biomedical(),
        };
        let embeddings = match config.features.embeddings_path() {
            Some(p) => Some(Arc::new(EmbeddingTable::load(p)?)),
            None => None,
        };
        Ok(Resources {
            stopwords,
            lexicon,
            embeddings,
        })
    }

    pub fn with_embeddings(mut self, table: EmbeddingTable) -> Self {
        self.embeddings = Some(Arc::new(table));
        self
    }

    fn require_embeddings(&self) -> Result<&EmbeddingTable> {
        self.embeddings
            .as_deref()
            .ok_or_else(|| Error::Config("this feature family needs an embedding table (features.embeddings)".into()))
    }
}

/// Feature extractor state fitted on training documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedFeatures {
    Tfidf { vocabulary: TfidfVocabulary },
    Entity { vocabulary: EntityGramVocabulary },
    EmbeddingMean,
    EmbeddingSequence { max_len: usize },
}

enum Rows {
    Sparse(Vec<SparseVector>),
    Dense(Vec<DenseVector>),
}

impl FittedFeatures {
    pub fn fit(config: &FeatureConfig, train_docs: &[CleanDocument], resources: &Resources) -> Result<Self> {
        Ok(match config {
            FeatureConfig::Tfidf { min_df, max_df } => FittedFeatures::Tfidf {
                vocabulary: TfidfVocabulary::fit(train_docs, *min_df, *max_df)?,
            },
            FeatureConfig::Entity { max_n, min_count, .. } => FittedFeatures::Entity {
                vocabulary: EntityGramVocabulary::fit(train_docs, &resources.lexicon, *max_n, *min_count)?,
            },
            FeatureConfig::EmbeddingMean { .. } => FittedFeatures::EmbeddingMean,
            FeatureConfig::EmbeddingSequence { max_len, .. } => FittedFeatures::EmbeddingSequence { max_len: *max_len },
        })
    }

    pub fn needs_embeddings(&self) -> bool {
        matches!(self, FittedFeatures::EmbeddingMean | FittedFeatures::EmbeddingSequence { .. })
    }

    fn rows(&self, docs: &[&CleanDocument], embeddings: Option<&EmbeddingTable>) -> Result<Rows> {
        Ok(match self {
            FittedFeatures::Tfidf { vocabulary } => Rows::Sparse(docs.iter().map(|d| vocabulary.transform(d)).collect()),
            FittedFeatures::Entity { vocabulary } => Rows::Sparse(docs.iter().map(|d| vocabulary.transform(d)).collect()),
            FittedFeatures::EmbeddingMean => {
                let table = embeddings.ok_or_else(|| Error::Config("missing embedding table".into()))?;
                Rows::Dense(docs.iter().map(|d| DenseVector(embed_mean(table, d))).collect())
            }
            FittedFeatures::EmbeddingSequence { .. } => {
                return Err(Error::InvalidArgument("sequence features have no vector form".into()))
            }
        })
    }
}

fn train_vectors<V: FeatureVector>(model: &ModelConfig, x: &[V], y: &[Label]) -> Result<TrainedModel> {
    Ok(match model {
        ModelConfig::Logreg(h) => TrainedModel::LogReg(LogRegModel::train(x, y, h)?),
        ModelConfig::Mnb { alpha } => TrainedModel::Mnb(MnbModel::train(x, y, *alpha)?),
        ModelConfig::Svm(h) => TrainedModel::Svm(SvmModel::train(x, y, h)?),
        ModelConfig::Lstm(_) => return Err(Error::InvalidArgument("the LSTM reads sequences".into())),
    })
}

fn score_vectors<V: FeatureVector>(model: &TrainedModel, x: &[V]) -> Result<Vec<(f64, Label)>> {
    x.iter().map(|v| model.score_vector(v)).collect()
}

/// Ranking scores (higher = more AI-like) and labels for `docs`.
pub fn score_documents(
    features: &FittedFeatures,
    model: &TrainedModel,
    docs: &[&CleanDocument],
    embeddings: Option<&EmbeddingTable>,
) -> Result<Vec<(f64, Label)>> {
    match (features, model) {
        (FittedFeatures::EmbeddingSequence { max_len }, TrainedModel::Lstm(m)) => {
            let table = embeddings.ok_or_else(|| Error::Config("missing embedding table".into()))?;
            docs.iter()
                .map(|d| {
                    let p = m.predict_proba(&EmbeddedDoc::new(table, d, *max_len))?;
                    Ok((p, label_from_probability(p)))
                })
                .collect()
        }
        (FittedFeatures::EmbeddingSequence { .. }, _) | (_, TrainedModel::Lstm(_)) => Err(Error::InvalidArgument(
            "the LSTM pairs only with sequence features".into(),
        )),
        _ => match features.rows(docs, embeddings)? {
            Rows::Sparse(x) => score_vectors(model, &x),
            Rows::Dense(x) => score_vectors(model, &x),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub truth: Label,
    pub predicted: Label,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub iteration: usize,
    pub split_seed: u64,
    pub model_seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    /// Misclassified test ids in dataset order.
    pub misclassified: Vec<String>,
}

/// Everything one iteration produced, for persisting or analysis.
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub result: IterationResult,
    pub split: SplitAssignment,
    pub features: FittedFeatures,
    pub model: TrainedModel,
    pub predictions: Vec<Prediction>,
}

/// The inputs that determine an experiment's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    pub stopwords: String,
    pub features: FeatureConfig,
    pub model: ModelConfig,
    pub iterations: usize,
    pub base_seed: u64,
    pub train_fraction: f64,
    pub validation_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub name: String,
    pub config: ConfigSnapshot,
    pub n_records: usize,
    pub iterations: Vec<IterationResult>,
    pub mean: MetricSet,
    pub std: MetricSet,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Per-iteration table followed by mean and standard deviation.
    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "{} ({} iterations, {} records)", self.name, self.iterations.len(), self.n_records);
        let _ = writeln!(
            out,
            "{:>5}  {:>8}  {:>9}  {:>6}  {:>6}  {:>6}  {:>6}",
            "iter", "accuracy", "precision", "recall", "f1", "auc", "errors"
        );
        let auc_str = |a: Option<f64>| a.map_or("-".to_string(), |v| format!("{v:.4}"));
        for it in &self.iterations {
            let m = &it.metrics;
            let _ = writeln!(
                out,
                "{:>5}  {:>8.4}  {:>9.4}  {:>6.4}  {:>6.4}  {:>6}  {:>6}",
                it.iteration,
                m.accuracy,
                m.precision,
                m.recall,
                m.f1,
                auc_str(m.auc),
                it.confusion.errors()
            );
        }
        for (label, m) in [("mean", &self.mean), ("std", &self.std)] {
            let _ = writeln!(
                out,
                "{:>5}  {:>8.4}  {:>9.4}  {:>6.4}  {:>6.4}  {:>6}",
                label,
                m.accuracy,
                m.precision,
                m.recall,
                m.f1,
                auc_str(m.auc)
            );
        }
        out
    }

    /// Reads a report, rejecting other schema versions.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        match value.get("schema_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == REPORT_SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::Config(format!(
                    "{}: report schema version {v}, expected {REPORT_SCHEMA_VERSION}",
                    path.display()
                )))
            }
            None => {
                return Err(Error::Config(format!("{}: not an experiment report", path.display())));
            }
        }
        serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Cleans every record's abstract, in dataset order.
pub fn clean_dataset(ds: &PairedDataset, stops: &StopWordList) -> Vec<CleanDocument> {
    ds.records()
        .par_iter()
        .map(|r| clean(r.id.as_str(), &r.abstract_text, stops))
        .collect()
}

fn positions(ds: &PairedDataset, ids: &[String]) -> Vec<usize> {
    ids.iter()
        .map(|id| ds.position(id).expect("split ids come from the dataset"))
        .collect()
}

/// One split, fit, train and evaluate cycle. `docs` must be
/// [`clean_dataset`] of `ds`.
pub fn run_iteration(
    config: &ExperimentConfig,
    ds: &PairedDataset,
    docs: &[CleanDocument],
    resources: &Resources,
    iteration: usize,
) -> Result<IterationOutcome> {
    let split_seed = config.base_seed.wrapping_add(iteration as u64);
    let model_seed = derive_seed(split_seed, MODEL_STREAM);
    let split = ds.split_by_title(config.train_fraction, split_seed)?;
    let model_config = config.model.with_seed(model_seed);
    let labels: Vec<Label> = ds.records().iter().map(|r| r.label).collect();

    let train_pos = positions(ds, &split.train_ids);
    let test_pos = positions(ds, &split.test_ids);
    if train_pos.is_empty() || test_pos.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "split left {} train and {} test records",
            train_pos.len(),
            test_pos.len()
        )));
    }
    let test_docs: Vec<&CleanDocument> = test_pos.iter().map(|&i| &docs[i]).collect();
    let embeddings = resources.embeddings.as_deref();

    let (features, model) = match &model_config {
        ModelConfig::Lstm(hyper) => {
            let table = resources.require_embeddings()?;
            let FeatureConfig::EmbeddingSequence { max_len, .. } = config.features else {
                return Err(Error::Config("the LSTM needs embedding_sequence features".into()));
            };
            let inner = ds
                .subset(&split.train_ids)?
                .split_by_title(1.0 - config.validation_fraction, derive_seed(split_seed, VALIDATION_STREAM))?;
            if inner.test_ids.is_empty() {
                return Err(Error::InvalidArgument("validation slice is empty; the training set is too small".into()));
            }
            let fit_pos = positions(ds, &inner.train_ids);
            let val_pos = positions(ds, &inner.test_ids);
            let seqs = |pos: &[usize]| -> Vec<EmbeddedDoc> {
                pos.iter().map(|&i| EmbeddedDoc::new(table, &docs[i], max_len)).collect()
            };
            let pick = |pos: &[usize]| -> Vec<Label> { pos.iter().map(|&i| labels[i]).collect() };
            let model = LstmModel::train(&seqs(&fit_pos), &pick(&fit_pos), &seqs(&val_pos), &pick(&val_pos), hyper)?;
            (FittedFeatures::EmbeddingSequence { max_len }, TrainedModel::Lstm(model))
        }
        _ => {
            if config.features.uses_embeddings() {
                resources.require_embeddings()?;
            }
            let train_docs: Vec<CleanDocument> = train_pos.iter().map(|&i| docs[i].clone()).collect();
            let features = FittedFeatures::fit(&config.features, &train_docs, resources)?;
            let y: Vec<Label> = train_pos.iter().map(|&i| labels[i]).collect();
            let refs: Vec<&CleanDocument> = train_docs.iter().collect();
            let model = match features.rows(&refs, embeddings)? {
                Rows::Sparse(x) => train_vectors(&model_config, &x, &y)?,
                Rows::Dense(x) => train_vectors(&model_config, &x, &y)?,
            };
            (features, model)
        }
    };

    let scored = score_documents(&features, &model, &test_docs, embeddings)?;
    let truth: Vec<Label> = test_pos.iter().map(|&i| labels[i]).collect();
    let predicted: Vec<Label> = scored.iter().map(|s| s.1).collect();
    let scores: Vec<f64> = scored.iter().map(|s| s.0).collect();
    let c = confusion(&predicted, &truth)?;
    let mut m = metrics(&c);
    let both_classes = truth.iter().any(|l| l.is_ai()) && truth.iter().any(|l| !l.is_ai());
    if both_classes {
        m.auc = Some(auc(&scores, &truth)?);
    }
    let predictions: Vec<Prediction> = test_pos
        .iter()
        .zip(&scored)
        .map(|(&i, &(score, predicted))| Prediction {
            id: ds.records()[i].id.clone(),
            truth: labels[i],
            predicted,
            score,
        })
        .collect();
    let misclassified = predictions
        .iter()
        .filter(|p| p.truth != p.predicted)
        .map(|p| p.id.clone())
        .collect();
    log::debug!("iteration {iteration}: accuracy {:.4}", m.accuracy);
    Ok(IterationOutcome {
        result: IterationResult {
            iteration,
            split_seed,
            model_seed,
            n_train: train_pos.len(),
            n_test: test_pos.len(),
            confusion: c,
            metrics: m,
            misclassified,
        },
        split,
        features,
        model,
        predictions,
    })
}

pub fn run_experiment(config: &ExperimentConfig, ds: &PairedDataset, resources: &Resources) -> Result<ExperimentReport> {
    run_experiment_keeping(config, ds, resources, None).map(|(report, _)| report)
}

/// Runs every iteration, in parallel up to `config.workers`, and also
/// returns the full outcome of iteration `keep` when requested.
pub fn run_experiment_keeping(
    config: &ExperimentConfig,
    ds: &PairedDataset,
    resources: &Resources,
    keep: Option<usize>,
) -> Result<(ExperimentReport, Option<IterationOutcome>)> {
    config.validate()?;
    if config.features.uses_embeddings() {
        resources.require_embeddings()?;
    }
    if let Some(k) = keep {
        if k >= config.iterations {
            return Err(Error::Config(format!(
                "cannot keep iteration {k} of {}",
                config.iterations
            )));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let (results, kept) = pool.install(|| -> Result<_> {
        let docs = clean_dataset(ds, &resources.stopwords);
        let outcomes: Vec<Result<(IterationResult, Option<IterationOutcome>)>> = (0..config.iterations)
            .into_par_iter()
            .map(|i| {
                let outcome = run_iteration(config, ds, &docs, resources, i)?;
                let result = outcome.result.clone();
                Ok((result, (keep == Some(i)).then_some(outcome)))
            })
            .collect();
        let mut results = Vec::with_capacity(outcomes.len());
        let mut kept = None;
        for o in outcomes {
            let (r, k) = o?;
            results.push(r);
            if k.is_some() {
                kept = k;
            }
        }
        Ok((results, kept))
    })?;
    let sets: Vec<MetricSet> = results.iter().map(|r| r.metrics).collect();
    let (mean, std) = summarize(&sets);
    let report = ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        name: config.display_name(),
        config: ConfigSnapshot {
            dataset: config.dataset.as_ref().map(|p| p.display().to_string()),
            stopwords: resources.stopwords.source_name().to_string(),
            features: config.features.clone(),
            model: config.model.clone(),
            iterations: config.iterations,
            base_seed: config.base_seed,
            train_fraction: config.train_fraction,
            validation_fraction: config.validation_fraction,
        },
        n_records: ds.len(),
        iterations: results,
        mean,
        std,
    };
    Ok((report, kept))
}

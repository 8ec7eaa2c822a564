//! From-scratch binary classifiers. AI is the positive class; a score or
//! probability exactly on the decision boundary classifies as Human.

mod io;
mod logreg;
mod lstm;
mod mnb;
mod svm;

use serde::{Deserialize, Serialize};

pub use io::{load_model, read_model, save_model, write_model, FORMAT_VERSION, MAGIC};
pub use logreg::{logistic_objective, LogRegHyper, LogRegModel};
pub use lstm::{DenseSequence, LstmHyper, LstmModel, LstmTrainingMeta};
pub use mnb::MnbModel;
pub use svm::{svm_objective, SvmHyper, SvmModel};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Epoch-level bookkeeping shared by the iterative linear trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Objective before training followed by the objective after each epoch.
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    LogReg,
    Mnb,
    Svm,
    Lstm,
}

impl ModelKind {
    pub fn tag(self) -> u8 {
        match self {
            ModelKind::LogReg => 1,
            ModelKind::Mnb => 2,
            ModelKind::Svm => 3,
            ModelKind::Lstm => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(ModelKind::LogReg),
            2 => Some(ModelKind::Mnb),
            3 => Some(ModelKind::Svm),
            4 => Some(ModelKind::Lstm),
            _ => None,
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::LogReg => "LR",
            ModelKind::Mnb => "MNB",
            ModelKind::Svm => "SVM",
            ModelKind::Lstm => "LSTM",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    LogReg(LogRegModel),
    Mnb(MnbModel),
    Svm(SvmModel),
    Lstm(LstmModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::LogReg(_) => ModelKind::LogReg,
            TrainedModel::Mnb(_) => ModelKind::Mnb,
            TrainedModel::Svm(_) => ModelKind::Svm,
            TrainedModel::Lstm(_) => ModelKind::Lstm,
        }
    }

    /// Ranking score of a feature row (higher = more AI-like) and its label.
    /// Fails for the sequence model, which consumes sequences.
    pub fn score_vector<V: FeatureVector>(&self, x: &V) -> Result<(f64, Label)> {
        match self {
            TrainedModel::LogReg(m) => {
                let p = m.predict_proba(x)?;
                Ok((p, label_from_probability(p)))
            }
            TrainedModel::Mnb(m) => {
                let s = m.log_scores(x)?;
                let margin = s[1] - s[0];
                Ok((margin, label_from_margin(margin)))
            }
            TrainedModel::Svm(m) => {
                let margin = m.decision(x)?;
                Ok((margin, label_from_margin(margin)))
            }
            TrainedModel::Lstm(_) => Err(Error::InvalidArgument(
                "the LSTM scores sequences, not feature vectors".into(),
            )),
        }
    }
}

/// AI iff `p > 0.5`.
pub fn label_from_probability(p: f64) -> Label {
    if p > 0.5 {
        Label::Ai
    } else {
        Label::Human
    }
}

/// AI iff `margin > 0`.
pub fn label_from_margin(margin: f64) -> Label {
    if margin > 0.0 {
        Label::Ai
    } else {
        Label::Human
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit against a 0/1 target, computed stably
/// as `ln(1 + e^z) - y z`.
pub fn bce_with_logit(z: f64, target: f64) -> f64 {
    let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    softplus - target * z
}

pub(crate) fn check_training_set<V: FeatureVector>(x: &[V], y: &[Label]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} feature rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    check_both_classes(y)?;
    let dim = x[0].dimension();
    for row in x {
        if row.dimension() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.dimension(),
            });
        }
        row.check_finite()?;
    }
    Ok(dim)
}

pub(crate) fn check_both_classes(y: &[Label]) -> Result<()> {
    let ai = y.iter().filter(|l| l.is_ai()).count();
    if y.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if ai == 0 {
        return Err(Error::SingleClass("human".into()));
    }
    if ai == y.len() {
        return Err(Error::SingleClass("ai".into()));
    }
    Ok(())
}

pub(crate) fn check_dimension(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        Err(Error::DimensionMismatch { expected, actual })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_and_bce() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!((bce_with_logit(0.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!(bce_with_logit(800.0, 1.0).abs() < 1e-12);
        assert!((bce_with_logit(-800.0, 1.0) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn boundary_is_human() {
        assert_eq!(label_from_probability(0.5), Label::Human);
        assert_eq!(label_from_margin(0.0), Label::Human);
        assert_eq!(label_from_margin(1e-300), Label::Ai);
    }
}

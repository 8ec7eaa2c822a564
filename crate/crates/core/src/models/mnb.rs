use serde::{Deserialize, Serialize};

use super::{check_both_classes, check_dimension, label_from_margin};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Multinomial naive Bayes with additive smoothing. Class index 0 is
/// Human, 1 is AI. Non-negative real features are accepted as fractional
/// counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbModel {
    pub log_priors: [f64; 2],
    /// `log_likelihoods[c][t] = ln((count(c,t) + alpha) / (sum_t count(c,t) + alpha |V|))`
    pub log_likelihoods: [Vec<f64>; 2],
    pub alpha: f64,
}

fn class_index(label: Label) -> usize {
    match label {
        Label::Human => 0,
        Label::Ai => 1,
    }
}

impl MnbModel {
    pub fn train<V: FeatureVector>(x: &[V], y: &[Label], alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument("smoothing alpha must be positive".into()));
        }
        if x.len() != y.len() {
            return Err(Error::InvalidArgument(format!("{} rows but {} labels", x.len(), y.len())));
        }
        check_both_classes(y)?;
        let dim = x[0].dimension();
        let mut counts = [vec![0.0; dim], vec![0.0; dim]];
        let mut docs = [0usize; 2];
        for (row, &label) in x.iter().zip(y) {
            check_dimension(dim, row.dimension())?;
            row.check_finite()?;
            if row.min_value() < 0.0 {
                return Err(Error::InvalidArgument(
                    "multinomial naive Bayes needs non-negative features".into(),
                ));
            }
            let c = class_index(label);
            docs[c] += 1;
            row.add_scaled_to(&mut counts[c], 1.0);
        }
        let n = y.len() as f64;
        let log_priors = [(docs[0] as f64 / n).ln(), (docs[1] as f64 / n).ln()];
        let log_likelihoods = counts.map(|class_counts| {
            let total: f64 = class_counts.iter().sum::<f64>() + alpha * dim as f64;
            class_counts.iter().map(|c| ((c + alpha) / total).ln()).collect()
        });
        Ok(MnbModel {
            log_priors,
            log_likelihoods,
            alpha,
        })
    }

    pub fn dimension(&self) -> usize {
        self.log_likelihoods[0].len()
    }

    /// `[score(Human), score(AI)]`.
    pub fn log_scores<V: FeatureVector>(&self, x: &V) -> Result<[f64; 2]> {
        check_dimension(self.dimension(), x.dimension())?;
        Ok([0, 1].map(|c| self.log_priors[c] + x.dot(&self.log_likelihoods[c])))
    }

    /// Posterior probability of AI.
    pub fn posterior_ai<V: FeatureVector>(&self, x: &V) -> Result<f64> {
        let [h, a] = self.log_scores(x)?;
        Ok(super::sigmoid(a - h))
    }

    /// Argmax class; ties go to Human.
    pub fn predict<V: FeatureVector>(&self, x: &V) -> Result<Label> {
        let [h, a] = self.log_scores(x)?;
        Ok(label_from_margin(a - h))
    }
}

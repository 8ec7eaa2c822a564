use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bce_with_logit, check_dimension, check_training_set, sigmoid, TrainingMeta};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogRegHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LogRegHyper {
    fn default() -> Self {
        LogRegHyper {
            learning_rate: 2.0,
            epochs: 30,
            l2: 1e-4,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
    pub meta: TrainingMeta,
}

/// Mean logistic loss plus `l2/2 * |w|^2`, with its gradient in `w` and `b`.
pub fn logistic_objective<V: FeatureVector>(
    weights: &[f64],
    bias: f64,
    x: &[V],
    y: &[Label],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    let mut loss = 0.0;
    for (row, label) in x.iter().zip(y) {
        let z = row.dot(weights) + bias;
        let t = label.target();
        loss += bce_with_logit(z, t);
        let r = (sigmoid(z) - t) / n;
        row.add_scaled_to(&mut grad, r);
        grad_b += r;
    }
    loss /= n;
    let mut sq = 0.0;
    for (g, w) in grad.iter_mut().zip(weights) {
        *g += l2 * w;
        sq += w * w;
    }
    (loss + 0.5 * l2 * sq, grad, grad_b)
}

impl LogRegModel {
    /// Mini-batch gradient descent on the L2-regularized logistic loss.
    pub fn train<V: FeatureVector>(x: &[V], y: &[Label], hyper: &LogRegHyper) -> Result<Self> {
        let dim = check_training_set(x, y)?;
        if hyper.batch_size == 0 || !(hyper.learning_rate > 0.0) || hyper.l2 < 0.0 {
            return Err(Error::InvalidArgument(
                "logistic regression needs batch_size >= 1, learning_rate > 0, l2 >= 0".into(),
            ));
        }
        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        let mut history = vec![logistic_objective(&w, b, x, y, hyper.l2).0];
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut grad = vec![0.0; dim];

        for _ in 0..hyper.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(hyper.batch_size) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let mut grad_b = 0.0;
                let scale = 1.0 / batch.len() as f64;
                for &i in batch {
                    let r = (sigmoid(x[i].dot(&w) + b) - y[i].target()) * scale;
                    x[i].add_scaled_to(&mut grad, r);
                    grad_b += r;
                }
                let decay = 1.0 - hyper.learning_rate * hyper.l2;
                for (wj, gj) in w.iter_mut().zip(&grad) {
                    *wj = decay * *wj - hyper.learning_rate * gj;
                }
                b -= hyper.learning_rate * grad_b;
            }
            history.push(logistic_objective(&w, b, x, y, hyper.l2).0);
        }
        if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::Diverged {
                epoch: hyper.epochs,
                loss: *history.last().unwrap(),
            });
        }
        Ok(LogRegModel {
            weights: w,
            bias: b,
            l2: hyper.l2,
            meta: TrainingMeta {
                epochs: hyper.epochs,
                learning_rate: hyper.learning_rate,
                seed: hyper.seed,
                objective_history: history,
            },
        })
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn decision<V: FeatureVector>(&self, x: &V) -> Result<f64> {
        check_dimension(self.dimension(), x.dimension())?;
        Ok(x.dot(&self.weights) + self.bias)
    }

    /// Probability of the AI class.
    pub fn predict_proba<V: FeatureVector>(&self, x: &V) -> Result<f64> {
        Ok(sigmoid(self.decision(x)?))
    }

    pub fn predict<V: FeatureVector>(&self, x: &V) -> Result<Label> {
        Ok(super::label_from_probability(self.predict_proba(x)?))
    }
}

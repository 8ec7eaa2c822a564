use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dimension, check_training_set, TrainingMeta};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmHyper {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmHyper {
    fn default() -> Self {
        SvmHyper {
            lambda: 1e-4,
            epochs: 10,
            seed: 0,
        }
    }
}

/// Linear SVM. The bias is an augmented constant feature and is therefore
/// regularized together with the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub meta: TrainingMeta,
}

/// `lambda/2 (|w|^2 + b^2) + mean(max(0, 1 - y (w.x + b)))` and a
/// subgradient (the hinge term contributes only where the margin is < 1).
pub fn svm_objective<V: FeatureVector>(
    weights: &[f64],
    bias: f64,
    x: &[V],
    y: &[Label],
    lambda: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut grad: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
    let mut grad_b = lambda * bias;
    let mut hinge = 0.0;
    for (row, label) in x.iter().zip(y) {
        let s = label.sign();
        let margin = s * (row.dot(weights) + bias);
        if margin < 1.0 {
            hinge += 1.0 - margin;
            row.add_scaled_to(&mut grad, -s / n);
            grad_b -= s / n;
        }
    }
    let sq: f64 = weights.iter().map(|w| w * w).sum::<f64>() + bias * bias;
    (0.5 * lambda * sq + hinge / n, grad, grad_b)
}

impl SvmModel {
    /// Pegasos: one sample per step with step size `1 / (lambda t)`,
    /// followed by projection onto the ball of radius `1/sqrt(lambda)`.
    /// Returns the end-of-epoch iterate with the lowest objective.
    pub fn train<V: FeatureVector>(x: &[V], y: &[Label], hyper: &SvmHyper) -> Result<Self> {
        let dim = check_training_set(x, y)?;
        if !(hyper.lambda > 0.0) {
            return Err(Error::InvalidArgument("SVM lambda must be positive".into()));
        }
        let lambda = hyper.lambda;
        // w = scale * v, with the bias stored as the last coordinate of v.
        let mut v = vec![0.0; dim + 1];
        let mut scale = 1.0;
        let mut sq_norm_v = 0.0;
        let radius_sq = 1.0 / lambda;

        let mut history = vec![svm_objective(&v[..dim], 0.0, x, y, lambda).0];
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut t = 0u64;
        let mut best: Option<(f64, Vec<f64>, f64)> = None;
        for _ in 0..hyper.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let s = y[i].sign();
                let vx = x[i].dot(&v[..dim]) + v[dim];
                let margin = s * scale * vx;

                let shrink = 1.0 - 1.0 / t as f64;
                if shrink <= 0.0 {
                    v.iter_mut().for_each(|e| *e = 0.0);
                    scale = 1.0;
                    sq_norm_v = 0.0;
                } else {
                    scale *= shrink;
                }
                if margin < 1.0 {
                    let a = eta * s / scale;
                    // |v + a x|^2 = |v|^2 + 2a v.x + a^2 |x|^2, with x augmented by 1.
                    let vx_now = if shrink <= 0.0 { 0.0 } else { vx };
                    let xx = x[i].squared_norm() + 1.0;
                    sq_norm_v += 2.0 * a * vx_now + a * a * xx;
                    x[i].add_scaled_to(&mut v[..dim], a);
                    v[dim] += a;
                }
                let norm_sq = scale * scale * sq_norm_v;
                if norm_sq > radius_sq {
                    scale *= (radius_sq / norm_sq).sqrt();
                }
                if scale < 1e-9 {
                    v.iter_mut().for_each(|e| *e *= scale);
                    sq_norm_v *= scale * scale;
                    scale = 1.0;
                }
            }
            let w: Vec<f64> = v[..dim].iter().map(|e| e * scale).collect();
            let b = v[dim] * scale;
            let obj = svm_objective(&w, b, x, y, lambda).0;
            history.push(obj);
            if best.as_ref().is_none_or(|(o, _, _)| obj < *o) {
                best = Some((obj, w, b));
            }
        }
        let (weights, bias) = match best {
            Some((_, w, b)) => (w, b),
            None => (vec![0.0; dim], 0.0),
        };
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(Error::Diverged {
                epoch: hyper.epochs,
                loss: f64::NAN,
            });
        }
        Ok(SvmModel {
            weights,
            bias,
            lambda,
            meta: TrainingMeta {
                epochs: hyper.epochs,
                learning_rate: 1.0 / lambda,
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

    pub fn predict<V: FeatureVector>(&self, x: &V) -> Result<Label> {
        Ok(super::label_from_margin(self.decision(x)?))
    }
}

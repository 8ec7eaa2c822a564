use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Confusion counts with AI as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn errors(&self) -> u64 {
        self.fp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
}

pub fn confusion(predictions: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if predictions.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("nothing to evaluate".into()));
    }
    let mut c = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (Label::Ai, Label::Ai) => c.tp += 1,
            (Label::Ai, Label::Human) => c.fp += 1,
            (Label::Human, Label::Ai) => c.fn_ += 1,
            (Label::Human, Label::Human) => c.tn += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy, precision, recall and F1; undefined ratios are 0. AUC is left
/// unset.
pub fn metrics(c: &ConfusionMatrix) -> MetricSet {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    MetricSet {
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        recall,
        f1,
        auc: None,
    }
}

/// Probability that a random AI record outscores a random Human record,
/// ties counting one half (Mann-Whitney U over average ranks).
pub fn auc(scores: &[f64], truth: &[Label]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::InvalidArgument("scores and labels differ in length".into()));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::NonFinite(format!("score {s}")));
    }
    let n_pos = truth.iter().filter(|l| l.is_ai()).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass(
            if n_pos == 0 { "human" } else { "ai" }.into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum keeps tied average ranks integral.
    let mut twice_rank_sum_pos: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1, average (i + j + 2) / 2
        let twice_avg = (i + j + 2) as u64;
        for &k in &order[i..=j] {
            if truth[k].is_ai() {
                twice_rank_sum_pos += twice_avg;
            }
        }
        i = j + 1;
    }
    let np = n_pos as u64;
    let twice_u = twice_rank_sum_pos - np * (np + 1);
    Ok(twice_u as f64 / (2 * np * n_neg as u64) as f64)
}

/// Arithmetic mean and sample standard deviation of each metric.
pub fn summarize(sets: &[MetricSet]) -> (MetricSet, MetricSet) {
    let pick: [fn(&MetricSet) -> f64; 4] = [|m| m.accuracy, |m| m.precision, |m| m.recall, |m| m.f1];
    let stats = |values: Vec<f64>| -> (f64, f64) {
        let n = values.len() as f64;
        if values.is_empty() {
            return (0.0, 0.0);
        }
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (mean, var.sqrt())
    };
    let s: Vec<(f64, f64)> = pick.iter().map(|f| stats(sets.iter().map(f).collect())).collect();
    let aucs: Option<Vec<f64>> = sets.iter().map(|m| m.auc).collect();
    let auc = aucs.filter(|a| !a.is_empty()).map(stats);
    (
        MetricSet {
            accuracy: s[0].0,
            precision: s[1].0,
            recall: s[2].0,
            f1: s[3].0,
            auc: auc.map(|a| a.0),
        },
        MetricSet {
            accuracy: s[0].1,
            precision: s[1].1,
            recall: s[2].1,
            f1: s[3].1,
            auc: auc.map(|a| a.1),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Ai, Human};

    #[test]
    fn all_correct_and_all_inverted() {
        let truth = [Ai, Ai, Human, Human];
        let c = confusion(&truth, &truth).unwrap();
        assert_eq!((c.tp, c.tn, c.fp, c.fn_), (2, 2, 0, 0));
        let m = metrics(&c);
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        let inverted = [Human, Human, Ai, Ai];
        let c = confusion(&inverted, &truth).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
        assert!(confusion(&truth[..3], &truth).is_err());
    }

    #[test]
    fn best_run_counts() {
        let c = ConfusionMatrix {
            tp: 2806,
            fp: 43,
            fn_: 60,
            tn: 2823,
        };
        assert_eq!((c.total(), c.errors()), (5732, 103));
        let m = metrics(&c);
        assert!((m.accuracy - 0.98203).abs() < 1e-5);
        assert!((m.precision - 0.98491).abs() < 1e-5);
        assert!((m.recall - 0.97906).abs() < 1e-5);
    }

    #[test]
    fn undefined_precision_is_zero() {
        let m = metrics(&ConfusionMatrix {
            tp: 0,
            fp: 0,
            fn_: 3,
            tn: 5,
        });
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn auc_basics() {
        assert_eq!(auc(&[0.9, 0.8, 0.1, 0.2], &[Ai, Ai, Human, Human]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 4], &[Ai, Human, Ai, Human]).unwrap(), 0.5);
        assert!(auc(&[0.1, 0.2], &[Ai, Ai]).is_err());
    }

    #[test]
    fn summary_mean_and_sample_std() {
        let a = MetricSet {
            accuracy: 0.9,
            precision: 1.0,
            recall: 0.5,
            f1: 0.6,
            auc: Some(0.8),
        };
        let b = MetricSet {
            accuracy: 0.7,
            auc: Some(1.0),
            ..a
        };
        let (mean, std) = summarize(&[a, b]);
        assert!((mean.accuracy - 0.8).abs() < 1e-15);
        assert!((std.accuracy - (0.02f64).sqrt()).abs() < 1e-12);
        assert_eq!(std.precision, 0.0);
        assert!((mean.auc.unwrap() - 0.9).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn metric_identities(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500, tn in 0u64..500) {
            prop_assume!(tp + fp + fn_ + tn > 0);
            let m = metrics(&ConfusionMatrix { tp, fp, fn_, tn });
            for v in [m.accuracy, m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if m.precision + m.recall > 0.0 {
                prop_assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() < 1e-12);
            } else {
                prop_assert_eq!(m.f1, 0.0);
            }
            if tp + fp == 0 { prop_assert_eq!(m.precision, 0.0); }
            if tp + fn_ == 0 { prop_assert_eq!(m.recall, 0.0); }
        }
    }
}

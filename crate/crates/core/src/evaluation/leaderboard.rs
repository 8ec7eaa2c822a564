use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::experiment::ExperimentReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub name: String,
    pub iterations: usize,
    pub accuracy: f64,
    pub accuracy_std: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub rows: Vec<LeaderboardRow>,
}

/// Rows ordered by ascending mean accuracy, then F1, then name.
pub fn leaderboard(reports: &[ExperimentReport]) -> Leaderboard {
    let mut rows: Vec<LeaderboardRow> = reports
        .iter()
        .map(|r| LeaderboardRow {
            name: r.name.clone(),
            iterations: r.iterations.len(),
            accuracy: r.mean.accuracy,
            accuracy_std: r.std.accuracy,
            precision: r.mean.precision,
            recall: r.mean.recall,
            f1: r.mean.f1,
            auc: r.mean.auc,
        })
        .collect();
    rows.sort_by(|a, b| {
        a.accuracy
            .total_cmp(&b.accuracy)
            .then(a.f1.total_cmp(&b.f1))
            .then_with(|| a.name.cmp(&b.name))
    });
    Leaderboard { rows }
}

impl Leaderboard {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("leaderboard serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max("Model".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>15}  {:>9}  {:>6}  {:>6}  {:>6}",
            "Model", "iters", "accuracy", "precision", "recall", "f1", "auc"
        );
        for r in &self.rows {
            let acc = format!("{:.3} ± {:.3}", r.accuracy, r.accuracy_std);
            let auc = r.auc.map_or("-".to_string(), |a| format!("{a:.3}"));
            let _ = writeln!(
                out,
                "{:<width$}  {:>5}  {:>15}  {:>9.3}  {:>6.3}  {:>6.3}  {:>6}",
                r.name, r.iterations, acc, r.precision, r.recall, r.f1, auc
            );
        }
        out
    }
}

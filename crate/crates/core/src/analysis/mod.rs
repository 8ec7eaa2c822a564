//! Misclassification analysis: which words dominate each error subset,
//! how rich their vocabulary is, and whether title length matters.

mod report;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use report::{research_questions_report, AnalysisOptions, ResearchReport, NO_ERRORS};

use crate::corpus::{AbstractRecord, Label, PairedDataset};
use crate::error::{Error, Result};
use crate::evaluation::Prediction;
use crate::textprep::{token_frequencies, CleanDocument};

pub const DEFAULT_TOP_K: usize = 20;
pub const DEFAULT_TITLE_THRESHOLD: f64 = 0.5;

/// Test records split by truth and correctness; ids keep input order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPartition {
    pub correct_human: Vec<String>,
    pub correct_ai: Vec<String>,
    /// Human abstracts predicted AI.
    pub miscls_human: Vec<String>,
    /// AI abstracts predicted Human.
    pub miscls_ai: Vec<String>,
}

impl ErrorPartition {
    pub fn len(&self) -> usize {
        self.correct_human.len() + self.correct_ai.len() + self.miscls_human.len() + self.miscls_ai.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn error_count(&self) -> usize {
        self.miscls_human.len() + self.miscls_ai.len()
    }

    fn push(&mut self, id: String, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Human, Label::Human) => self.correct_human.push(id),
            (Label::Ai, Label::Ai) => self.correct_ai.push(id),
            (Label::Human, Label::Ai) => self.miscls_human.push(id),
            (Label::Ai, Label::Human) => self.miscls_ai.push(id),
        }
    }

    pub fn from_predictions(predictions: &[Prediction]) -> Self {
        let mut p = ErrorPartition::default();
        for pr in predictions {
            p.push(pr.id.clone(), pr.truth, pr.predicted);
        }
        p
    }

    /// All ids of the human (or AI) test records.
    pub fn all_of(&self, label: Label) -> Vec<String> {
        let (a, b) = match label {
            Label::Human => (&self.correct_human, &self.miscls_human),
            Label::Ai => (&self.correct_ai, &self.miscls_ai),
        };
        a.iter().chain(b).cloned().collect()
    }
}

pub fn partition_errors(test_records: &[&AbstractRecord], predictions: &[Label]) -> Result<ErrorPartition> {
    if test_records.len() != predictions.len() {
        return Err(Error::InvalidArgument(format!(
            "{} test records but {} predictions",
            test_records.len(),
            predictions.len()
        )));
    }
    let mut p = ErrorPartition::default();
    for (r, &pred) in test_records.iter().zip(predictions) {
        p.push(r.id.clone(), r.label, pred);
    }
    Ok(p)
}

/// Top-k token table of one subset plus vocabulary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyContrast {
    pub subset_name: String,
    pub k: usize,
    pub n_documents: usize,
    pub n_tokens: u64,
    pub distinct_tokens: usize,
    /// Distinct over total tokens of the whole subset.
    pub type_token_ratio: f64,
    /// Per-document type-token ratio averaged over documents.
    pub mean_document_ttr: f64,
    pub entries: Vec<(String, u64)>,
    /// Set when the subset has no tokens at all.
    pub empty: bool,
}

pub fn frequency_table(subset_name: impl Into<String>, docs: &[&CleanDocument], k: usize) -> FrequencyContrast {
    let table = token_frequencies(docs.iter().copied());
    let n_tokens = table.total();
    let doc_ttrs: Vec<f64> = docs
        .iter()
        .filter(|d| !d.is_empty())
        .map(|d| {
            let distinct: BTreeSet<&str> = d.tokens.iter().map(String::as_str).collect();
            distinct.len() as f64 / d.token_count() as f64
        })
        .collect();
    FrequencyContrast {
        subset_name: subset_name.into(),
        k,
        n_documents: docs.len(),
        n_tokens,
        distinct_tokens: table.len(),
        type_token_ratio: if n_tokens > 0 { table.len() as f64 / n_tokens as f64 } else { 0.0 },
        mean_document_ttr: if doc_ttrs.is_empty() {
            0.0
        } else {
            doc_ttrs.iter().sum::<f64>() / doc_ttrs.len() as f64
        },
        entries: table.top_k(k),
        empty: n_tokens == 0,
    }
}

/// Two top-k tables and the tokens appearing in only one of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastPair {
    pub a: FrequencyContrast,
    pub b: FrequencyContrast,
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
    /// Union of `only_in_a` and `only_in_b`, sorted.
    pub symmetric_difference: Vec<String>,
}

pub fn frequency_contrast(
    name_a: &str,
    docs_a: &[&CleanDocument],
    name_b: &str,
    docs_b: &[&CleanDocument],
    k: usize,
) -> Result<ContrastPair> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let a = frequency_table(name_a, docs_a, k);
    let b = frequency_table(name_b, docs_b, k);
    let set_a: BTreeSet<&str> = a.entries.iter().map(|e| e.0.as_str()).collect();
    let set_b: BTreeSet<&str> = b.entries.iter().map(|e| e.0.as_str()).collect();
    let only_in_a: Vec<String> = set_a.difference(&set_b).map(|s| s.to_string()).collect();
    let only_in_b: Vec<String> = set_b.difference(&set_a).map(|s| s.to_string()).collect();
    let symmetric_difference = set_a.symmetric_difference(&set_b).map(|s| s.to_string()).collect();
    Ok(ContrastPair {
        a,
        b,
        only_in_a,
        only_in_b,
        symmetric_difference,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TitleLengthStats {
    pub subset_name: String,
    pub mean_words: f64,
    /// Sample standard deviation; 0 for fewer than two titles.
    pub std_words: f64,
    pub n: usize,
}

pub fn title_length_stats<'a, I>(subset_name: impl Into<String>, records: I) -> TitleLengthStats
where
    I: IntoIterator<Item = &'a AbstractRecord>,
{
    let counts: Vec<f64> = records.into_iter().map(|r| r.title_word_count() as f64).collect();
    let n = counts.len();
    let mean = if n > 0 { counts.iter().sum::<f64>() / n as f64 } else { 0.0 };
    let std = if n > 1 {
        (counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    TitleLengthStats {
        subset_name: subset_name.into(),
        mean_words: mean,
        std_words: std,
        n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TitleLengthReport {
    pub baseline: TitleLengthStats,
    pub miscls_ai: TitleLengthStats,
    pub miscls_human: TitleLengthStats,
    /// Misclassified-AI mean minus baseline mean.
    pub delta_mean: f64,
    pub threshold: f64,
    /// `negative` when |delta| is below the threshold, `positive` when
    /// not, `undetermined` without misclassified AI abstracts.
    pub verdict: String,
}

fn records_by_id<'a>(ds: &'a PairedDataset, ids: &'a [String]) -> Result<Vec<&'a AbstractRecord>> {
    ids.iter()
        .map(|id| {
            ds.get(id)
                .ok_or_else(|| Error::InvalidArgument(format!("id `{id}` is not in the dataset")))
        })
        .collect()
}

pub fn title_length_report(partition: &ErrorPartition, ds: &PairedDataset, threshold: f64) -> Result<TitleLengthReport> {
    let baseline = title_length_stats("all titles", ds.records());
    let miscls_ai = title_length_stats("misclassified AI", records_by_id(ds, &partition.miscls_ai)?);
    let miscls_human = title_length_stats("misclassified human", records_by_id(ds, &partition.miscls_human)?);
    let delta_mean = miscls_ai.mean_words - baseline.mean_words;
    let verdict = if miscls_ai.n == 0 {
        "undetermined"
    } else if delta_mean.abs() < threshold {
        "negative"
    } else {
        "positive"
    };
    Ok(TitleLengthReport {
        baseline,
        miscls_ai,
        miscls_human,
        delta_mean,
        threshold,
        verdict: verdict.into(),
    })
}

pub(crate) fn docs_for<'a>(
    lookup: &HashMap<&str, &'a CleanDocument>,
    ids: &[String],
) -> Result<Vec<&'a CleanDocument>> {
    ids.iter()
        .map(|id| {
            lookup
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("id `{id}` is not in the dataset")))
        })
        .collect()
}

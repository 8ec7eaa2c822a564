use std::collections::HashMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{
    docs_for, frequency_contrast, frequency_table, title_length_report, ContrastPair, ErrorPartition,
    FrequencyContrast, TitleLengthReport, DEFAULT_TITLE_THRESHOLD, DEFAULT_TOP_K,
};
use crate::corpus::{Label, PairedDataset};
use crate::error::{Error, Result};
use crate::textprep::{clean, CleanDocument, StopWordList};

pub const NO_ERRORS: &str = "no errors to analyze";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub k: usize,
    pub title_threshold: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            k: DEFAULT_TOP_K,
            title_threshold: DEFAULT_TITLE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq1 {
    /// Correctly classified AI abstracts vs misclassified AI abstracts.
    pub abstracts: ContrastPair,
    /// Every test title vs the titles of misclassified AI abstracts.
    pub titles: ContrastPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq2 {
    /// All AI abstracts vs misclassified AI abstracts.
    pub ai: ContrastPair,
    /// All human abstracts vs misclassified human abstracts.
    pub human: ContrastPair,
    /// Vocabulary statistics of the four partition subsets.
    pub subsets: Vec<FrequencyContrast>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResearchReport {
    pub status: String,
    pub n_test: usize,
    pub n_miscls_human: usize,
    pub n_miscls_ai: usize,
    pub k: usize,
    /// Human vs AI abstracts over the whole test split.
    pub overview: ContrastPair,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rq1: Option<Rq1>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rq2: Option<Rq2>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rq3: Option<TitleLengthReport>,
}

pub fn research_questions_report(
    partition: &ErrorPartition,
    ds: &PairedDataset,
    stops: &StopWordList,
    options: &AnalysisOptions,
) -> Result<ResearchReport> {
    if options.k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let ids: Vec<&String> = partition
        .correct_human
        .iter()
        .chain(&partition.correct_ai)
        .chain(&partition.miscls_human)
        .chain(&partition.miscls_ai)
        .collect();
    let mut bodies = Vec::with_capacity(ids.len());
    let mut titles = Vec::with_capacity(ids.len());
    for id in &ids {
        let r = ds
            .get(id)
            .ok_or_else(|| Error::InvalidArgument(format!("id `{id}` is not in the dataset")))?;
        bodies.push(clean(id.as_str(), &r.abstract_text, stops));
        titles.push(clean(id.as_str(), &r.title, stops));
    }
    let body_of: HashMap<&str, &CleanDocument> = ids.iter().map(|s| s.as_str()).zip(&bodies).collect();
    let title_of: HashMap<&str, &CleanDocument> = ids.iter().map(|s| s.as_str()).zip(&titles).collect();
    let k = options.k;

    let all_human = docs_for(&body_of, &partition.all_of(Label::Human))?;
    let all_ai = docs_for(&body_of, &partition.all_of(Label::Ai))?;
    let overview = frequency_contrast("human", &all_human, "AI", &all_ai, k)?;

    let mut report = ResearchReport {
        status: "ok".into(),
        n_test: partition.len(),
        n_miscls_human: partition.miscls_human.len(),
        n_miscls_ai: partition.miscls_ai.len(),
        k,
        overview,
        rq1: None,
        rq2: None,
        rq3: None,
    };
    if partition.error_count() == 0 {
        report.status = NO_ERRORS.into();
        return Ok(report);
    }

    let correct_ai = docs_for(&body_of, &partition.correct_ai)?;
    let miscls_ai = docs_for(&body_of, &partition.miscls_ai)?;
    let correct_human = docs_for(&body_of, &partition.correct_human)?;
    let miscls_human = docs_for(&body_of, &partition.miscls_human)?;
    let all_titles: Vec<&CleanDocument> = titles.iter().collect();
    let miscls_ai_titles = docs_for(&title_of, &partition.miscls_ai)?;

    report.rq1 = Some(Rq1 {
        abstracts: frequency_contrast("correct AI", &correct_ai, "misclassified AI", &miscls_ai, k)?,
        titles: frequency_contrast("all titles", &all_titles, "misclassified AI titles", &miscls_ai_titles, k)?,
    });
    report.rq2 = Some(Rq2 {
        ai: frequency_contrast("all AI", &all_ai, "misclassified AI", &miscls_ai, k)?,
        human: frequency_contrast("all human", &all_human, "misclassified human", &miscls_human, k)?,
        subsets: vec![
            frequency_table("correct human", &correct_human, k),
            frequency_table("correct AI", &correct_ai, k),
            frequency_table("misclassified human", &miscls_human, k),
            frequency_table("misclassified AI", &miscls_ai, k),
        ],
    });
    report.rq3 = Some(title_length_report(partition, ds, options.title_threshold)?);
    Ok(report)
}

impl ResearchReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Every top-k table as `figure,subset,rank,token,count` rows.
    pub fn frequency_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["figure", "subset", "rank", "token", "count"])?;
        for (figure, pair) in self.contrasts() {
            for table in [&pair.a, &pair.b] {
                for (rank, (token, count)) in table.entries.iter().enumerate() {
                    w.write_record([
                        figure,
                        table.subset_name.as_str(),
                        &(rank + 1).to_string(),
                        token,
                        &count.to_string(),
                    ])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 input"))
    }

    fn contrasts(&self) -> Vec<(&'static str, &ContrastPair)> {
        let mut out = vec![("human_vs_ai", &self.overview)];
        if let Some(rq1) = &self.rq1 {
            out.push(("rq1_abstracts", &rq1.abstracts));
            out.push(("rq1_titles", &rq1.titles));
        }
        if let Some(rq2) = &self.rq2 {
            out.push(("rq2_ai", &rq2.ai));
            out.push(("rq2_human", &rq2.human));
        }
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Test records: {}  misclassified: {} ({} human, {} AI)",
            self.n_test,
            self.n_miscls_human + self.n_miscls_ai,
            self.n_miscls_human,
            self.n_miscls_ai
        );
        if self.status == NO_ERRORS {
            let _ = writeln!(out, "\n{NO_ERRORS}");
            return out;
        }
        if let Some(rq1) = &self.rq1 {
            let _ = writeln!(out, "\nRQ1: words dominating misclassified AI abstracts");
            render_pair(&mut out, &rq1.abstracts);
            render_pair(&mut out, &rq1.titles);
        }
        if let Some(rq2) = &self.rq2 {
            let _ = writeln!(out, "\nRQ2: vocabulary of the misclassified subsets");
            render_pair(&mut out, &rq2.ai);
            render_pair(&mut out, &rq2.human);
            let _ = writeln!(out, "  {:<22} {:>6} {:>8} {:>9} {:>8}", "subset", "docs", "tokens", "ttr", "doc ttr");
            for s in &rq2.subsets {
                let _ = writeln!(
                    out,
                    "  {:<22} {:>6} {:>8} {:>9.4} {:>8.4}",
                    s.subset_name, s.n_documents, s.n_tokens, s.type_token_ratio, s.mean_document_ttr
                );
            }
        }
        if let Some(rq3) = &self.rq3 {
            let _ = writeln!(out, "\nRQ3: does title length affect misclassification?");
            for s in [&rq3.baseline, &rq3.miscls_ai, &rq3.miscls_human] {
                let _ = writeln!(
                    out,
                    "  {:<22} n={:<6} mean {:.2} words (sd {:.2})",
                    s.subset_name, s.n, s.mean_words, s.std_words
                );
            }
            let _ = writeln!(
                out,
                "  difference {:+.2} words, threshold {:.2}: {}",
                rq3.delta_mean, rq3.threshold, rq3.verdict
            );
        }
        out
    }
}

fn render_pair(out: &mut String, pair: &ContrastPair) {
    let _ = writeln!(out, "  {} vs {}", pair.a.subset_name, pair.b.subset_name);
    let rows = pair.a.entries.len().max(pair.b.entries.len());
    for i in 0..rows {
        let cell = |t: &FrequencyContrast| {
            t.entries
                .get(i)
                .map_or(String::new(), |(w, c)| format!("{w} ({c})"))
        };
        let _ = writeln!(out, "    {:<32} {}", cell(&pair.a), cell(&pair.b));
    }
    if pair.a.empty || pair.b.empty {
        let _ = writeln!(out, "    (empty subset)");
    }
    let _ = writeln!(out, "    only in {}: {}", pair.b.subset_name, pair.only_in_b.join(", "));
}

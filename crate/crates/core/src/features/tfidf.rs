use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::sparse::SparseVector;
use crate::error::{Error, Result};
use crate::textprep::CleanDocument;

const BAND_EPS: f64 = 1e-12;

/// Fitted TF-IDF vocabulary: lexicographically sorted terms whose document
/// frequency ratio lies in the inclusive band `[min_df, max_df]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfVocabulary {
    terms: Vec<String>,
    document_frequency: Vec<u64>,
    n_documents: u64,
    min_df: f64,
    max_df: f64,
}

impl TfidfVocabulary {
    pub fn fit(docs: &[CleanDocument], min_df: f64, max_df: f64) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::InvalidArgument("cannot fit TF-IDF on an empty corpus".into()));
        }
        if !(0.0..=1.0).contains(&min_df) || !(0.0..=1.0).contains(&max_df) || min_df >= max_df {
            return Err(Error::InvalidArgument(format!(
                "document-frequency band must satisfy 0 <= min_df < max_df <= 1, got [{min_df}, {max_df}]"
            )));
        }
        let n = docs.len() as u64;
        let mut df: HashMap<&str, u64> = HashMap::new();
        let mut seen: Vec<&str> = Vec::new();
        for doc in docs {
            seen.clear();
            seen.extend(doc.tokens.iter().map(String::as_str));
            seen.sort_unstable();
            seen.dedup();
            for &t in &seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = df
            .into_iter()
            .filter(|&(_, d)| {
                let ratio = d as f64 / n as f64;
                ratio >= min_df - BAND_EPS && ratio <= max_df + BAND_EPS
            })
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary(format!(
                "no term has document frequency within [{min_df}, {max_df}] of {n} documents"
            )));
        }
        kept.sort_unstable_by(|a, b| a.0.cmp(b.0));
        let (terms, document_frequency) = kept.into_iter().map(|(t, d)| (t.to_string(), d)).unzip();
        Ok(TfidfVocabulary {
            terms,
            document_frequency,
            n_documents: n,
            min_df,
            max_df,
        })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self) -> &[u64] {
        &self.document_frequency
    }

    pub fn n_documents(&self) -> u64 {
        self.n_documents
    }

    pub fn band(&self) -> (f64, f64) {
        (self.min_df, self.max_df)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        let n = self.n_documents as f64;
        let df = self.document_frequency[index] as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    /// Raw count times idf for every in-vocabulary term, L2-normalized.
    pub fn transform(&self, doc: &CleanDocument) -> SparseVector {
        let mut counts: HashMap<usize, u64> = HashMap::new();
        for t in &doc.tokens {
            if let Some(i) = self.index_of(t) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, tf)| (i, tf as f64 * self.idf(i)))
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        let (indices, values): (Vec<usize>, Vec<f64>) = entries.into_iter().unzip();
        let mut v = SparseVector::new(indices, values, self.len()).expect("indices sorted and in range");
        if norm > 0.0 {
            v.scale(1.0 / norm);
        }
        v
    }

    pub fn transform_all(&self, docs: &[CleanDocument]) -> Vec<SparseVector> {
        docs.iter().map(|d| self.transform(d)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;
    use proptest::prelude::*;

    fn doc(text: &str) -> CleanDocument {
        CleanDocument::new("d", text.split_whitespace().map(String::from).collect())
    }

    #[test]
    fn inclusive_lower_bound() {
        let mut docs: Vec<_> = (0..99).map(|_| doc("common filler")).collect();
        docs.push(doc("common rare"));
        let vocab = TfidfVocabulary::fit(&docs, 0.01, 0.99).unwrap();
        assert!(vocab.index_of("rare").is_some());
        // in all 100 documents: ratio 1.0 > 0.99
        assert!(vocab.index_of("common").is_none());
        // in 99 of 100: ratio 0.99, inclusive
        assert!(vocab.index_of("filler").is_some());
    }

    #[test]
    fn full_band_keeps_all_sorted() {
        let docs: Vec<_> = ["b a", "c", "a d", "e b", "a"].iter().map(|t| doc(t)).collect();
        let vocab = TfidfVocabulary::fit(&docs, 0.0, 1.0).unwrap();
        assert_eq!(vocab.terms(), ["a", "b", "c", "d", "e"]);
        assert_eq!(vocab.document_frequency(), [3, 2, 1, 1, 1]);
    }

    #[test]
    fn errors() {
        assert!(matches!(TfidfVocabulary::fit(&[], 0.0, 1.0), Err(Error::InvalidArgument(_))));
        let docs = vec![doc("x"), doc("x")];
        assert!(matches!(TfidfVocabulary::fit(&docs, 0.0, 0.5), Err(Error::EmptyVocabulary(_))));
        assert!(TfidfVocabulary::fit(&docs, 0.5, 0.5).is_err());
    }

    #[test]
    fn single_term_in_every_doc_has_unit_weight() {
        let docs = vec![doc("x"), doc("x y"), doc("x")];
        let vocab = TfidfVocabulary::fit(&docs, 0.0, 1.0).unwrap();
        assert_eq!(vocab.idf(vocab.index_of("x").unwrap()), 1.0);
        let v = vocab.transform(&doc("x"));
        assert_eq!(v.values(), [1.0]);
    }

    #[test]
    fn oov_doc_is_empty() {
        let vocab = TfidfVocabulary::fit(&[doc("x y")], 0.0, 1.0).unwrap();
        let v = vocab.transform(&doc("z w"));
        assert_eq!(v.nnz(), 0);
        assert_eq!(v.dimension(), 2);
    }

    proptest! {
        #[test]
        fn band_soundness_and_unit_norm(
            corpus in proptest::collection::vec(proptest::collection::vec(0u8..12, 0..15), 1..25),
            lo in 0.0f64..0.5,
            width in 0.05f64..0.5,
        ) {
            let docs: Vec<CleanDocument> = corpus
                .iter()
                .map(|d| CleanDocument::new("d", d.iter().map(|c| format!("t{c}")).collect()))
                .collect();
            let hi = (lo + width).min(1.0);
            match TfidfVocabulary::fit(&docs, lo, hi) {
                Ok(vocab) => {
                    let n = docs.len() as f64;
                    for (i, term) in vocab.terms().iter().enumerate() {
                        let df = docs.iter().filter(|d| d.tokens.contains(term)).count();
                        prop_assert_eq!(df as u64, vocab.document_frequency()[i]);
                        let r = df as f64 / n;
                        prop_assert!(r >= lo - 1e-12 && r <= hi + 1e-12);
                    }
                    prop_assert!(vocab.terms().windows(2).all(|w| w[0] < w[1]));
                    for d in &docs {
                        let v = vocab.transform(d);
                        if v.nnz() > 0 {
                            prop_assert!((v.squared_norm().sqrt() - 1.0).abs() <= 1e-9);
                        }
                    }
                    let again = TfidfVocabulary::fit(&docs, lo, hi).unwrap();
                    prop_assert_eq!(&again, &vocab);
                }
                Err(Error::EmptyVocabulary(_)) => {}
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}

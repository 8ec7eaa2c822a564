use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sparse::SparseVector;
use crate::error::{Error, Result};
use crate::textprep::{clean, CleanDocument, StopWordList};

const BUNDLED_LEXICON: &str = include_str!("lexicon_biomed.txt");

/// Multi-word term list driving the entity chunker. Terms are stored in
/// cleaned form so they match cleaned documents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    name: String,
    terms: Vec<Vec<String>>,
}

impl Lexicon {
    pub fn biomedical() -> Self {
        Self::parse(BUNDLED_LEXICON, "biomed-v1", &StopWordList::english())
    }

    pub fn empty() -> Self {
        Lexicon {
            name: "empty".into(),
            terms: Vec::new(),
        }
    }

    /// One term per line, cleaned with `stops`; terms that clean to nothing
    /// are dropped.
    pub fn parse(text: &str, name: impl Into<String>, stops: &StopWordList) -> Self {
        let mut terms: Vec<Vec<String>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| clean("", l, stops).tokens)
            .filter(|t| !t.is_empty())
            .collect();
        terms.sort();
        terms.dedup();
        Lexicon {
            name: name.into(),
            terms,
        }
    }

    pub fn from_file(path: impl AsRef<Path>, stops: &StopWordList) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text, path.display().to_string(), stops))
    }

    pub fn from_terms<I, S>(terms: I, name: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let text = terms.into_iter().map(|t| t.as_ref().to_string()).collect::<Vec<_>>().join("\n");
        Self::parse(&text, name, &StopWordList::empty())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[Vec<String>] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Marks every token position covered by some lexicon term occurrence.
    pub fn coverage(&self, tokens: &[String]) -> Vec<bool> {
        let mut by_first: HashMap<&str, Vec<&[String]>> = HashMap::new();
        for t in &self.terms {
            by_first.entry(t[0].as_str()).or_default().push(t);
        }
        let mut covered = vec![false; tokens.len()];
        for i in 0..tokens.len() {
            if let Some(cands) = by_first.get(tokens[i].as_str()) {
                for term in cands {
                    let end = i + term.len();
                    if end <= tokens.len() && tokens[i..end] == **term {
                        covered[i..end].iter_mut().for_each(|c| *c = true);
                    }
                }
            }
        }
        covered
    }
}

/// Multiset of space-joined n-grams.
pub type GramBag = BTreeMap<String, u64>;

/// Emits every window of length `<= max_n` inside each maximal run of
/// lexicon-covered tokens.
pub fn extract_entity_grams(doc: &CleanDocument, lexicon: &Lexicon, max_n: usize) -> GramBag {
    let mut bag = GramBag::new();
    if max_n == 0 {
        return bag;
    }
    let covered = lexicon.coverage(&doc.tokens);
    let mut start = 0;
    while start < covered.len() {
        if !covered[start] {
            start += 1;
            continue;
        }
        let mut end = start;
        while end < covered.len() && covered[end] {
            end += 1;
        }
        let run = &doc.tokens[start..end];
        for len in 1..=max_n.min(run.len()) {
            for window in run.windows(len) {
                *bag.entry(window.join(" ")).or_default() += 1;
            }
        }
        start = end;
    }
    bag
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityGramVocabulary {
    grams: Vec<String>,
    lexicon: Lexicon,
    max_n: usize,
    min_count: u64,
}

impl EntityGramVocabulary {
    pub fn fit(docs: &[CleanDocument], lexicon: &Lexicon, max_n: usize, min_count: u64) -> Result<Self> {
        if max_n == 0 {
            return Err(Error::InvalidArgument("max_n must be at least 1".into()));
        }
        if min_count == 0 {
            return Err(Error::InvalidArgument("min_count must be at least 1".into()));
        }
        let mut total = GramBag::new();
        for doc in docs {
            for (g, c) in extract_entity_grams(doc, lexicon, max_n) {
                *total.entry(g).or_default() += c;
            }
        }
        let grams: Vec<String> = total.into_iter().filter(|&(_, c)| c >= min_count).map(|(g, _)| g).collect();
        if grams.is_empty() {
            return Err(Error::EmptyVocabulary(format!(
                "no entity n-gram occurs at least {min_count} times (lexicon {})",
                lexicon.name()
            )));
        }
        Ok(EntityGramVocabulary {
            grams,
            lexicon: lexicon.clone(),
            max_n,
            min_count,
        })
    }

    pub fn grams(&self) -> &[String] {
        &self.grams
    }

    pub fn lexicon_name(&self) -> &str {
        self.lexicon.name()
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    /// Raw per-document gram counts over the fitted vocabulary.
    pub fn transform(&self, doc: &CleanDocument) -> SparseVector {
        let bag = extract_entity_grams(doc, &self.lexicon, self.max_n);
        let entries = bag
            .into_iter()
            .filter_map(|(g, c)| self.grams.binary_search(&g).ok().map(|i| (i, c as f64)))
            .collect();
        SparseVector::from_unsorted(entries, self.len()).expect("indices in range")
    }

    pub fn transform_all(&self, docs: &[CleanDocument]) -> Vec<SparseVector> {
        docs.iter().map(|d| self.transform(d)).collect()
    }
}

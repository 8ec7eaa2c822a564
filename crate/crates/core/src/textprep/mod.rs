//! Text cleaning and tokenization shared by every feature family.
//!
//! [`clean`] applies, in order: markup and escape removal, whitespace
//! collapse, lowercasing, replacement of every non-`[a-z]` character by a
//! word boundary, tokenization on spaces, stop-word removal and removal of
//! the two corpus-dominant words `paper` and `study`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ENGLISH_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// Removed from every document after stop-word filtering.
pub const CORPUS_DOMINANT_WORDS: [&str; 2] = ["paper", "study"];

static TAG_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^<>]*>").unwrap());
static ENTITY_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"&(?:#[0-9]+|#[xX][0-9a-fA-F]+|[A-Za-z][A-Za-z0-9]*);").unwrap());
static ESCAPE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\\(?:u[0-9a-fA-F]{4}|x[0-9a-fA-F]{2}|[nrtfvb0\\])").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopWordList {
    words: BTreeSet<String>,
    source_name: String,
}

impl StopWordList {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS, "english-v1").expect("bundled stop-word list is valid")
    }

    pub fn empty() -> Self {
        StopWordList {
            words: BTreeSet::new(),
            source_name: "empty".into(),
        }
    }

    pub fn from_words<I, S>(words: I, source_name: impl Into<String>) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for w in words {
            let w = w.as_ref().trim();
            if w.is_empty() {
                return Err(Error::InvalidArgument("empty stop word".into()));
            }
            set.insert(w.to_lowercase());
        }
        Ok(StopWordList {
            words: set,
            source_name: source_name.into(),
        })
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, source_name: impl Into<String>) -> Result<Self> {
        Self::from_words(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
            source_name,
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.display().to_string())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

impl Default for StopWordList {
    fn default() -> Self {
        Self::english()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanDocument {
    pub source_id: String,
    pub tokens: Vec<String>,
}

impl CleanDocument {
    pub fn new(source_id: impl Into<String>, tokens: Vec<String>) -> Self {
        CleanDocument {
            source_id: source_id.into(),
            tokens,
        }
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined token text.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Lowercase `[a-z]+` words of `raw` after markup and escape removal, in
/// order, without any stop-word filtering.
pub fn tokenize(raw: &str) -> Vec<String> {
    let no_tags = TAG_RE.replace_all(raw, " ");
    let no_entities = ENTITY_RE.replace_all(&no_tags, " ");
    let no_escapes = ESCAPE_RE.replace_all(&no_entities, " ");
    let collapsed = no_escapes.split_whitespace().collect::<Vec<_>>().join(" ");
    let lowered = collapsed.to_lowercase();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in lowered.chars() {
        if ch.is_ascii_lowercase() {
            current.push(ch);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

pub fn is_removed(word: &str, stops: &StopWordList) -> bool {
    stops.contains(word) || CORPUS_DOMINANT_WORDS.contains(&word)
}

pub fn clean(source_id: impl Into<String>, raw: &str, stops: &StopWordList) -> CleanDocument {
    let tokens = tokenize(raw)
        .into_iter()
        .filter(|t| !is_removed(t, stops))
        .collect();
    CleanDocument::new(source_id, tokens)
}

/// Corpus-wide token counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    counts: BTreeMap<String, u64>,
}

impl FrequencyTable {
    pub fn get(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// The `k` most frequent tokens, count descending, ties lexicographic.
    pub fn top_k(&self, k: usize) -> Vec<(String, u64)> {
        let mut entries: Vec<(String, u64)> = self.counts.iter().map(|(t, &c)| (t.clone(), c)).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries.truncate(k);
        entries
    }
}

pub fn token_frequencies<'a, I>(docs: I) -> FrequencyTable
where
    I: IntoIterator<Item = &'a CleanDocument>,
{
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        for t in &doc.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    FrequencyTable {
        counts: counts.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    }
}

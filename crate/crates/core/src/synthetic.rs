//! Seeded synthetic corpora with a planted human/AI vocabulary contrast.
//!
//! "AI" abstracts draw every token from a Zipf-shaped common vocabulary.
//! "Human" abstracts mix in terms from a separate, also Zipf-shaped, rare
//! vocabulary at a per-document rate. A small share
//! of humans use no rare terms and a small share of AI abstracts borrow a
//! few, so a good detector still makes a handful of mistakes.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AbstractRecord, Label, PairedDataset};
use crate::features::EmbeddingTable;
use crate::textprep::{is_removed, StopWordList};

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Pronounceable lowercase word number `index` built from `syllables`
/// consonant-vowel pairs. Distinct indices below 70^syllables give
/// distinct words, and different syllable counts never collide.
pub fn pseudo_word(index: usize, syllables: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut n = index;
    let mut word = String::with_capacity(2 * syllables);
    for _ in 0..syllables {
        let s = n % base;
        n /= base;
        word.push(CONSONANTS[s / VOWELS.len()] as char);
        word.push(VOWELS[s % VOWELS.len()] as char);
    }
    word
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_pairs: usize,
    pub common_vocab: usize,
    pub rare_vocab: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Per-human-document rare-term rate is uniform in this range.
    pub rare_rate: (f64, f64),
    /// Share of human abstracts written with common words only.
    pub plain_human_fraction: f64,
    /// Share of AI abstracts that borrow a few rare terms.
    pub rare_ai_fraction: f64,
    pub title_words: (usize, usize),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_pairs: 500,
            common_vocab: 300,
            rare_vocab: 120,
            min_tokens: 60,
            max_tokens: 120,
            rare_rate: (0.1, 0.3),
            plain_human_fraction: 0.02,
            rare_ai_fraction: 0.02,
            title_words: (9, 18),
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn common_words(&self) -> Vec<String> {
        vocabulary(self.common_vocab, 3, 0)
    }

    pub fn rare_words(&self) -> Vec<String> {
        vocabulary(self.rare_vocab, 4, 0)
    }
}

/// `n` pseudo-words of the given length, skipping stop words.
fn vocabulary(n: usize, syllables: usize, offset: usize) -> Vec<String> {
    let stops = StopWordList::english();
    (offset..)
        .map(|i| pseudo_word(i * 7919 + 13, syllables))
        .filter(|w| !is_removed(w, &stops))
        .scan(std::collections::HashSet::new(), |seen, w| Some(seen.insert(w.clone()).then_some(w)))
        .flatten()
        .take(n)
        .collect()
}

/// A fully paired synthetic dataset; record `i` of each pair has id
/// `syn-{i}` (human) and `syn-{i}-ai`.
pub fn synthetic_corpus(spec: &SyntheticSpec) -> PairedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let common = spec.common_words();
    let rare = spec.rare_words();
    let zipf = WeightedIndex::new((1..=common.len()).map(|r| 1.0 / r as f64)).expect("non-empty vocabulary");
    let rare_zipf = WeightedIndex::new((1..=rare.len()).map(|r| 1.0 / r as f64)).expect("non-empty vocabulary");
    let vocab = Vocab {
        common: &common,
        rare: &rare,
        zipf: &zipf,
        rare_zipf: &rare_zipf,
    };

    let mut records = Vec::with_capacity(2 * spec.n_pairs);
    for i in 0..spec.n_pairs {
        let n_title = rng.random_range(spec.title_words.0..=spec.title_words.1);
        let mut title: Vec<&str> = (0..n_title.saturating_sub(1)).map(|_| common[zipf.sample(&mut rng)].as_str()).collect();
        // A five-syllable marker keeps titles unique.
        let marker = pseudo_word(i, 5);
        title.push(&marker);
        let title = title.join(" ");

        let human_rate = if rng.random_bool(spec.plain_human_fraction) {
            0.0
        } else {
            rng.random_range(spec.rare_rate.0..=spec.rare_rate.1)
        };
        let human = draw_text(&mut rng, spec, &vocab, Some(human_rate));
        let ai = if rng.random_bool(spec.rare_ai_fraction) {
            draw_text(&mut rng, spec, &vocab, Some(spec.rare_rate.0))
        } else {
            draw_text(&mut rng, spec, &vocab, None)
        };
        records.push(AbstractRecord::new(format!("syn-{i}"), title.clone(), human, Label::Human).expect("valid"));
        records.push(AbstractRecord::new(format!("syn-{i}-ai"), title, ai, Label::Ai).expect("valid"));
    }
    PairedDataset::from_records(records, false).expect("synthetic pairs are complete")
}

struct Vocab<'a> {
    common: &'a [String],
    rare: &'a [String],
    zipf: &'a WeightedIndex<f64>,
    rare_zipf: &'a WeightedIndex<f64>,
}

fn draw_text(rng: &mut ChaCha8Rng, spec: &SyntheticSpec, vocab: &Vocab, rare_rate: Option<f64>) -> String {
    let n = rng.random_range(spec.min_tokens..=spec.max_tokens);
    let mut words = Vec::with_capacity(n);
    for _ in 0..n {
        match rare_rate {
            Some(r) if r > 0.0 && rng.random_bool(r) => words.push(vocab.rare[vocab.rare_zipf.sample(rng)].as_str()),
            _ => words.push(vocab.common[vocab.zipf.sample(rng)].as_str()),
        }
    }
    let mut text = words.join(" ");
    text.push('.');
    text
}

/// Embeddings in which common and rare words sit in two separated
/// clusters with uniform jitter.
pub fn synthetic_embeddings(spec: &SyntheticSpec, dimension: usize, seed: u64) -> EmbeddingTable {
    assert!(dimension >= 2, "need at least two dimensions");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = EmbeddingTable::new(dimension);
    let mut add = |word: &str, center: f64, rng: &mut ChaCha8Rng| {
        let mut v: Vec<f64> = (0..dimension).map(|_| rng.random_range(-0.5..0.5)).collect();
        v[0] += center;
        v[1] -= center;
        table.insert(word, &v).expect("dimension matches");
    };
    for w in spec.common_words() {
        add(&w, -1.0, &mut rng);
    }
    for w in spec.rare_words() {
        add(&w, 1.0, &mut rng);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::{clean, token_frequencies};

    #[test]
    fn pseudo_words_are_alphabetic_and_distinct() {
        let words: Vec<String> = (0..5000).map(|i| pseudo_word(i, 3)).collect();
        let distinct: std::collections::HashSet<&String> = words.iter().collect();
        assert_eq!(distinct.len(), words.len());
        assert!(words.iter().all(|w| w.len() == 6 && w.bytes().all(|b| b.is_ascii_lowercase())));
    }

    #[test]
    fn corpus_is_paired_and_deterministic() {
        let spec = SyntheticSpec {
            n_pairs: 50,
            ..Default::default()
        };
        let a = synthetic_corpus(&spec);
        let b = synthetic_corpus(&spec);
        assert_eq!(a.records(), b.records());
        assert_eq!(a.len(), 100);
        assert_eq!(a.pairs().len(), 50);
        assert_eq!(a.validate().anomaly_count(), 0);
    }

    #[test]
    fn rare_terms_only_in_humans_mostly() {
        let spec = SyntheticSpec {
            n_pairs: 200,
            rare_ai_fraction: 0.0,
            ..Default::default()
        };
        let ds = synthetic_corpus(&spec);
        let stops = StopWordList::english();
        let rare: std::collections::HashSet<String> = spec.rare_words().into_iter().collect();
        let ai_docs: Vec<_> = ds
            .records()
            .iter()
            .filter(|r| r.label.is_ai())
            .map(|r| clean(r.id.as_str(), &r.abstract_text, &stops))
            .collect();
        let freq = token_frequencies(&ai_docs);
        assert!(freq.iter().all(|(t, _)| !rare.contains(t)));
        // Cleaning keeps every generated word.
        let raw_len = ds.records()[0].abstract_text.split_whitespace().count();
        assert_eq!(clean("x", &ds.records()[0].abstract_text, &stops).token_count(), raw_len);
    }

    #[test]
    fn embedding_table_covers_vocabularies() {
        let spec = SyntheticSpec::default();
        let table = synthetic_embeddings(&spec, 8, 1);
        assert_eq!(table.vocabulary_size(), spec.common_vocab + spec.rare_vocab);
        assert_eq!(table.dimension(), 8);
    }
}

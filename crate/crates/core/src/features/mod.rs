//! Document representations: TF-IDF, lexicon entity n-gram counts and
//! static word embeddings (mean vector and padded sequence).

mod embedding;
mod entity;
mod sparse;
mod tfidf;

pub use embedding::{embed_mean, embed_sequence, EmbeddedDoc, EmbeddingTable, PaddedSequence, SequenceInput};
pub use entity::{extract_entity_grams, EntityGramVocabulary, GramBag, Lexicon};
pub use sparse::{DenseVector, FeatureVector, SparseVector};
pub use tfidf::TfidfVocabulary;

/// Default document-frequency band: terms in fewer than 1% or more than 99%
/// of documents are dropped.
pub const DEFAULT_MIN_DF: f64 = 0.01;
pub const DEFAULT_MAX_DF: f64 = 0.99;
/// Longest entity n-gram emitted by default.
pub const DEFAULT_MAX_N: usize = 9;
/// Default sequence length for recurrent inputs.
pub const DEFAULT_MAX_LEN: usize = 256;

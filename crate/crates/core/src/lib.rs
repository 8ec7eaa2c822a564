//! Detection of machine-generated scientific abstracts.
//!
//! The crate covers the whole workflow: a paired human/AI corpus
//! ([`corpus`]), fabrication of AI abstracts through a completion endpoint
//! ([`generation`]), text cleaning ([`textprep`]), three feature families
//! ([`features`]), four from-scratch classifiers ([`models`]), the
//! repeated-split evaluation harness ([`evaluation`]) and the
//! misclassification analysis ([`analysis`]).

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod generation;
pub mod models;
pub mod synthetic;
pub mod textprep;

pub use corpus::{AbstractRecord, Label, PairedDataset, SplitAssignment};
pub use error::{Error, Result};
pub use evaluation::{ExperimentConfig, ExperimentReport, MetricSet};
pub use features::{EmbeddingTable, SparseVector, TfidfVocabulary};
pub use models::TrainedModel;
pub use textprep::{CleanDocument, StopWordList};

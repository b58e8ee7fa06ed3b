//! Dictionary-augmented character-level BiLSTM-CRF tagger for Chinese
//! clinical named entities.
//!
//! The pipeline: a column-format corpus is split into clauses, each
//! character is mapped to a learned embedding, a bidirectional maximum
//! matching segmenter turns an external dictionary into per-character
//! feature vectors, one or two BiLSTM encoders summarise the sequence, and
//! a linear-chain CRF scores the BIEOS tag sequence. Everything is
//! deterministic given a seed.

pub mod corpus;
pub mod crf;
pub mod dictionary;
pub mod error;
pub mod eval;
pub mod features;
pub mod model;
pub mod nn;
pub mod synth;

pub use corpus::{EntitySpan, EntityType, LabeledSentence, Position, Tag, Vocabulary};
pub use dictionary::{Dictionary, Segment, SegmentList};
pub use error::Error;
pub use eval::EvalReport;
pub use features::FeatureScheme;
pub use model::{
    build_model, evaluate_model, load_model, save_model, tag, train, ArchKind, ModelConfig,
    TaggerModel, TrainOutcome,
};

//! Desk-scale end-to-end check that the SCTC-SB loss is learnable: a synthetic
//! clustered-feature corpus, a linear output layer and AdamW with warmup.

pub mod corpus;
pub mod model;
pub mod optim;
mod train;

pub use corpus::{read_corpus_dir, write_corpus_dir, CorpusConfig, SyntheticCorpus, Utterance};
pub use model::LinearModel;
pub use optim::{AdamW, WarmupSchedule};
pub use train::{
    attribute_layout, evaluate, evaluate_logits, mean_loss, train, AttributeScore,
    EvaluationSummary, TrainConfig, TrainOutcome,
};

//! Small autoregressive language models (Elman RNN, LSTM, Transformer) on a
//! dense reverse-mode autodiff tape, with AdamW training over curriculum plans.

mod checkpoint;
mod gradcheck;
mod model;
mod optim;
mod score;
pub mod tape;
pub mod tensor;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointHeader, MAGIC, VERSION};
pub use gradcheck::{grad_check, toy_spec, GradCheckReport, Probe};
pub use model::{init_params, log_sum_exp, Arch, LanguageModel, ModelSpec, Params};
pub use optim::{lr_at, AdamWConfig, OptimizerState, Schedule};
pub use score::{perplexity, SentenceScorer, UnigramModel};
pub use tensor::Mat;
pub use train::{train, EpochRecord, StageSummary, StopReason, TrainConfig, TrainReport};

use crate::curriculum::CurriculumError;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("invalid model spec: {0}")]
    BadSpec(String),
    #[error("token id {id} outside vocabulary of {vocab}")]
    TokenOutOfRange { id: u32, vocab: usize },
    #[error("sequence of {len} tokens exceeds window length {window}")]
    TooLong { len: usize, window: usize },
    #[error("windows need at least two tokens")]
    TooShort,
    #[error("sequences in a batch differ in length")]
    Ragged,
    #[error("nothing to score")]
    EmptyBatch,
    #[error("training plan has no stages")]
    EmptyPlan,
    #[error("stage {stage} yields no complete window")]
    NoWindows { stage: usize },
    #[error("training diverged in stage {stage}, epoch {epoch}, after {step} updates (non-finite loss)")]
    Diverged { stage: usize, epoch: usize, step: u64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Curriculum(#[from] CurriculumError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Cross-validation experiments: plans, training with early stopping,
//! evaluation, repetition averaging and report rendering.

mod cv;
mod experiment;
mod metrics;
mod report;
mod train;

pub use cv::{make_kfold, make_loso, CvKind, CvPlan, Fold, SpeakerTag};
pub use experiment::{
    run_experiment, run_variants, CvSpec, ExperimentOutput, FoldArtifacts, FoldResult, FoldStatus,
    ModelConfig, Report, RunConfig, SpeakerRow,
};
pub use metrics::{evaluate, majority_baseline, Metrics};
pub use report::{render_table, write_training_log};
pub use train::{train_model, EpochLog, TrainedModel};

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::net::NetError;
use crate::windows::WindowError;

#[derive(Debug, Error, PartialEq)]
pub enum HarnessError {
    #[error("{entries} entries cannot be split into {folds} folds")]
    TooFewEntries { entries: usize, folds: usize },
    #[error("leave-one-speaker-out needs at least 2 speakers, found {0}")]
    TooFewSpeakers(usize),
    #[error("validation size {val_size} does not fit in a training portion of {available}")]
    ValidationTooLarge { val_size: usize, available: usize },
    #[error("fold has an empty {0} set")]
    EmptySet(&'static str),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

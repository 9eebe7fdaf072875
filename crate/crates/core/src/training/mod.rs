//! Staged training at desk scale: Table-style stage schedule with
//! trainable-parameter masks, a decoupled-weight-decay Adam optimizer,
//! deterministic synthetic datasets, and loss-curve logging.

pub mod optimizer;
pub mod runner;
pub mod schedule;
pub mod synthetic;

pub use optimizer::AdamW;
pub use runner::{run_stage, LossLog, RunOptions};
pub use schedule::{build_stage_schedule, stage_spec, StageName, StageSpec};
pub use synthetic::{
    alignment_target, hier_pooled_tokens, synth_video, synthetic_task, SyntheticItem,
    SyntheticTask, TaskConfig, TaskKind, ALIGNMENT_NOISE_RATIO,
};

use thiserror::Error;

use crate::encoders::EncoderError;
use crate::fusion::PipelineError;
use crate::sampler::SamplerError;
use crate::NumericsError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("loss diverged to {loss} at step {step}")]
    Divergence { step: usize, loss: f64 },
    #[error("invalid stage spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

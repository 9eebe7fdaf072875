//! The core pipeline mechanism: spatial pooling with learned row-end tokens,
//! per-stream MLP projection, parameter-free sequence fusion, and a tiny
//! causal decoder with greedy generation.

pub mod decoder;
pub mod pipeline;
pub mod projector;
pub mod stream;
pub mod text;

pub use decoder::{argmax_lowest_id, Decoder, DecoderConfig, GreedyOutput, DEFAULT_MAX_GENERATION_LEN};
pub use pipeline::{
    fuse, pool_and_rowtokens, pool_and_rowtokens_value, preprocess_frame, verify_stream,
    ForwardOutput, Model, PipelineConfig, DECODER_PREFIX, FLAT_ENCODER_PREFIX,
    FLAT_PROJECTOR_PREFIX, HIER_ENCODER_PREFIX, HIER_PROJECTOR_PREFIX, ROW_TOKENS_PREFIX,
    ROW_TOKEN_FLAT_PATH, ROW_TOKEN_HIER_PATH,
};
pub use projector::Projector;
pub use stream::{grid_provenance, Provenance, StreamSource, TokenStream};

use thiserror::Error;

use crate::budget::BudgetError;
use crate::encoders::EncoderError;
use crate::sampler::SamplerError;
use crate::NumericsError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("shape mismatch: expected {expected}, got {got:?}")]
    ShapeMismatch { expected: String, got: Vec<usize> },
    #[error("token id {id} out of vocabulary (size {vocab})")]
    VocabOutOfRange { id: usize, vocab: usize },
    #[error("text token sequence is empty")]
    EmptyText,
    #[error("no loss targets: need visual context or at least two text tokens")]
    NoTargets,
    #[error("decoder sequence is empty")]
    EmptySequence,
    #[error("sequence length {len} exceeds decoder maximum {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("stream counts disagree with the budget report: expected flat {expected_flat} / hier {expected_hier}, got {got_flat} / {got_hier}")]
    CountMismatch {
        expected_flat: u64,
        expected_hier: u64,
        got_flat: u64,
        got_hier: u64,
    },
    #[error("invalid provenance: {0}")]
    ProvenanceInvalid(String),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

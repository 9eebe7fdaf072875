//! Numeric kernel: dense f64 tensors, a small reverse-mode autograd engine,
//! named parameter storage, seeded initialization, binary checkpointing, and
//! a finite-difference gradient checker.

pub mod autograd;
pub mod gradcheck;
pub mod init;
pub mod params;
pub mod serialize;
pub mod tensor;

pub use autograd::{Graph, NodeId, LAYERNORM_EPS};
pub use gradcheck::{grad_check, LossFn};
pub use init::{derive_seed, seeded_rng, uniform_init, xavier_bound, xavier_init};
pub use params::{hash_tensor, Param, ParamStore};
pub use serialize::{load_store, read_tensor, save_store, write_tensor};
pub use tensor::{bilinear_resize, gelu, half_pixel_source, softmax_rows, Tensor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("unsupported shape: expected {expected}, got {got:?}")]
    UnsupportedShape {
        expected: &'static str,
        got: Vec<usize>,
    },
    #[error("unknown parameter path: {0}")]
    UnknownPath(String),
    #[error("duplicate parameter path: {0}")]
    DuplicatePath(String),
    #[error("gradient undefined for frozen leaf: {0}")]
    FrozenLeaf(String),
    #[error("loss evaluated to a non-finite value: {0}")]
    NonFiniteLoss(f64),
    #[error("malformed checkpoint: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

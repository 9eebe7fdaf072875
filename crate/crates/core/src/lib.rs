//! Dual vision-encoder token pipeline at desk scale.
//!
//! Two toy vision encoders — a flat patch encoder for semantics and a
//! four-stage hierarchical encoder for spatial structure — feed a shared
//! token pipeline: spatial pooling, learned row-end tokens, per-stream MLP
//! projection, sequence concatenation, and a tiny causal decoder. Around the
//! pipeline sit a token-budget planner, a staged training harness with
//! trainable-parameter masks, and a benchmark scoring/reporting kit.

pub mod budget;
pub mod config;
pub mod encoders;
pub mod evalkit;
pub mod fusion;
pub mod nn;
pub mod numerics;
pub mod sampler;
pub mod training;

pub use numerics::NumericsError;

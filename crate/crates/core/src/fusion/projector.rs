//! Per-stream two-layer MLP projector into decoder space.
//!
//! Each encoder stream gets its own projector: fc1 -> GELU -> fc2, applied
//! token-wise (no token mixing). Weights are Xavier-initialized.

use crate::nn::Linear;
use crate::numerics::{Graph, NodeId, ParamStore};
use crate::NumericsError;

use super::PipelineError;

#[derive(Debug, Clone)]
pub struct Projector {
    pub prefix: String,
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    fc1: Linear,
    fc2: Linear,
}

impl Projector {
    pub fn new(prefix: impl Into<String>, in_dim: usize, hidden_dim: usize, out_dim: usize) -> Self {
        let prefix = prefix.into();
        Self {
            fc1: Linear::new(format!("{prefix}.fc1"), in_dim, hidden_dim),
            fc2: Linear::new(format!("{prefix}.fc2"), hidden_dim, out_dim),
            prefix,
            in_dim,
            hidden_dim,
            out_dim,
        }
    }

    pub fn register(&self, store: &mut ParamStore, seed: u64) -> Result<(), NumericsError> {
        self.fc1.register(store, seed)?;
        self.fc2.register(store, seed)
    }

    /// Project (T, in_dim) tokens to (T, out_dim). T = 0 passes through.
    pub fn project(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        tokens: NodeId,
    ) -> Result<NodeId, PipelineError> {
        let shape = graph.value(tokens).shape().to_vec();
        if shape.len() != 2 || shape[1] != self.in_dim {
            return Err(PipelineError::ShapeMismatch {
                expected: format!("(T, {})", self.in_dim),
                got: shape,
            });
        }
        let h = self.fc1.forward(graph, store, tokens)?;
        let h = graph.gelu(h);
        Ok(self.fc2.forward(graph, store, h)?)
    }
}

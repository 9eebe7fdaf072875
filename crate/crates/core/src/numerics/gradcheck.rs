//! Central finite-difference verification of reverse-mode gradients.
//!
//! The checker is the universal oracle for every trainable path in the
//! pipeline: any scalar loss expressible as a graph over a [`ParamStore`] can
//! be checked leaf-by-leaf against numerical differentiation.

use super::autograd::{Graph, NodeId};
use super::params::ParamStore;
use super::tensor::Tensor;
use crate::NumericsError;

/// A scalar loss built on a fresh graph from the current parameters.
pub trait LossFn {
    fn build(&self, graph: &mut Graph, store: &ParamStore) -> NodeId;
}

impl<F> LossFn for F
where
    F: Fn(&mut Graph, &ParamStore) -> NodeId,
{
    fn build(&self, graph: &mut Graph, store: &ParamStore) -> NodeId {
        self(graph, store)
    }
}

fn eval_scalar(f: &dyn LossFn, store: &ParamStore) -> Result<f64, NumericsError> {
    let mut graph = Graph::new();
    let loss = f.build(&mut graph, store);
    let value = graph.value(loss).item();
    if !value.is_finite() {
        return Err(NumericsError::NonFiniteLoss(value));
    }
    Ok(value)
}

/// Compare the reverse-mode gradient of `leaf` against central finite
/// differences, element by element. Returns the max relative error
/// `|g_fd - g_ad| / (|g_fd| + |g_ad| + 1e-8)`.
///
/// Frozen leaves are refused: their gradient is undefined by contract.
pub fn grad_check(
    f: &dyn LossFn,
    store: &ParamStore,
    leaf: &str,
    epsilon: f64,
) -> Result<f64, NumericsError> {
    if !store.is_trainable(leaf)? {
        return Err(NumericsError::FrozenLeaf(leaf.to_string()));
    }
    eval_scalar(f, store)?;

    let mut graph = Graph::new();
    let loss = f.build(&mut graph, store);
    graph.backward(loss);
    let shape = store.tensor(leaf)?.shape().to_vec();
    let ad = graph
        .grad_by_path(leaf)
        .cloned()
        .unwrap_or_else(|| Tensor::zeros(&shape));

    let mut max_rel = 0.0f64;
    let numel = store.tensor(leaf)?.numel();
    let mut perturbed = store.clone();
    for i in 0..numel {
        let original = store.tensor(leaf)?.data()[i];
        perturbed.tensor_mut(leaf)?.data_mut()[i] = original + epsilon;
        let plus = eval_scalar(f, &perturbed)?;
        perturbed.tensor_mut(leaf)?.data_mut()[i] = original - epsilon;
        let minus = eval_scalar(f, &perturbed)?;
        perturbed.tensor_mut(leaf)?.data_mut()[i] = original;
        let fd = (plus - minus) / (2.0 * epsilon);
        let rel = (fd - ad.data()[i]).abs() / (fd.abs() + ad.data()[i].abs() + 1e-8);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

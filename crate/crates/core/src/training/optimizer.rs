//! Adam with decoupled weight decay, applied only to trainable leaves.

use std::collections::BTreeMap;

use crate::numerics::{Graph, ParamStore, Tensor};

#[derive(Debug, Clone)]
pub struct AdamW {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step_count: u64,
    moments: BTreeMap<String, (Tensor, Tensor)>,
}

impl AdamW {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            step_count: 0,
            moments: BTreeMap::new(),
        }
    }

    /// Apply one update from the gradients recorded on `graph`. Leaves that
    /// are frozen or received no gradient are left bitwise untouched.
    pub fn step(&mut self, store: &mut ParamStore, graph: &Graph) {
        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for path in store.paths() {
            if !store.is_trainable(&path).unwrap_or(false) {
                continue;
            }
            let Some(grad) = graph.grad_by_path(&path) else {
                continue;
            };
            let grad = grad.clone();
            let numel = grad.numel();
            let (m, v) = self
                .moments
                .entry(path.clone())
                .or_insert_with(|| (Tensor::zeros(grad.shape()), Tensor::zeros(grad.shape())));
            let value = store.tensor_mut(&path).expect("trainable leaf exists");
            for i in 0..numel {
                let g = grad.data()[i];
                let mi = self.beta1 * m.data()[i] + (1.0 - self.beta1) * g;
                let vi = self.beta2 * v.data()[i] + (1.0 - self.beta2) * g * g;
                m.data_mut()[i] = mi;
                v.data_mut()[i] = vi;
                let m_hat = mi / bias1;
                let v_hat = vi / bias2;
                let p = value.data()[i];
                value.data_mut()[i] = p
                    - self.learning_rate * (m_hat / (v_hat.sqrt() + self.eps) + self.weight_decay * p);
            }
        }
    }
}

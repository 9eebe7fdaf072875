//! Small reusable network pieces built on the autograd graph: linear layers,
//! layer norms, and pre-norm transformer blocks. Parameters live in a
//! [`ParamStore`] under dotted path prefixes; construction only records
//! shapes, `register` materializes seeded weights.

use crate::numerics::{derive_seed, uniform_init, xavier_init, Graph, NodeId, ParamStore, Tensor};
use crate::NumericsError;

/// Fully connected layer, weight (in, out) + bias (out,).
#[derive(Debug, Clone)]
pub struct Linear {
    pub prefix: String,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(prefix: impl Into<String>, in_dim: usize, out_dim: usize) -> Self {
        Self {
            prefix: prefix.into(),
            in_dim,
            out_dim,
        }
    }

    fn weight_path(&self) -> String {
        format!("{}.weight", self.prefix)
    }

    fn bias_path(&self) -> String {
        format!("{}.bias", self.prefix)
    }

    pub fn register(&self, store: &mut ParamStore, seed: u64) -> Result<(), NumericsError> {
        let w = xavier_init(&[self.in_dim, self.out_dim], derive_seed(seed, &self.weight_path()))?;
        store.insert(&self.weight_path(), w, true)?;
        store.insert(&self.bias_path(), Tensor::zeros(&[self.out_dim]), true)?;
        Ok(())
    }

    pub fn forward(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        x: NodeId,
    ) -> Result<NodeId, NumericsError> {
        let w = graph.param(store, &self.weight_path())?;
        let b = graph.param(store, &self.bias_path())?;
        let h = graph.matmul(x, w);
        Ok(graph.add_bias(h, b))
    }
}

/// Layer norm with affine parameters over the last dimension.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub prefix: String,
    pub dim: usize,
}

impl LayerNorm {
    pub fn new(prefix: impl Into<String>, dim: usize) -> Self {
        Self {
            prefix: prefix.into(),
            dim,
        }
    }

    pub fn register(&self, store: &mut ParamStore) -> Result<(), NumericsError> {
        store.insert(&format!("{}.gamma", self.prefix), Tensor::full(&[self.dim], 1.0), true)?;
        store.insert(&format!("{}.beta", self.prefix), Tensor::zeros(&[self.dim]), true)?;
        Ok(())
    }

    pub fn forward(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        x: NodeId,
    ) -> Result<NodeId, NumericsError> {
        let gamma = graph.param(store, &format!("{}.gamma", self.prefix))?;
        let beta = graph.param(store, &format!("{}.beta", self.prefix))?;
        Ok(graph.layernorm(x, gamma, beta))
    }
}

/// Pre-norm transformer block: multi-head self-attention and a GELU MLP,
/// each behind a residual connection. `causal` masks future positions.
#[derive(Debug, Clone)]
pub struct TransformerBlock {
    pub d_model: usize,
    pub heads: usize,
    norm1: LayerNorm,
    norm2: LayerNorm,
    wq: Linear,
    wk: Linear,
    wv: Linear,
    wo: Linear,
    fc1: Linear,
    fc2: Linear,
    causal: bool,
}

impl TransformerBlock {
    pub fn new(prefix: &str, d_model: usize, heads: usize, causal: bool) -> Self {
        assert!(heads >= 1 && d_model % heads == 0, "d_model {d_model} not divisible by heads {heads}");
        let hidden = 4 * d_model;
        Self {
            d_model,
            heads,
            norm1: LayerNorm::new(format!("{prefix}.norm1"), d_model),
            norm2: LayerNorm::new(format!("{prefix}.norm2"), d_model),
            wq: Linear::new(format!("{prefix}.attn.wq"), d_model, d_model),
            wk: Linear::new(format!("{prefix}.attn.wk"), d_model, d_model),
            wv: Linear::new(format!("{prefix}.attn.wv"), d_model, d_model),
            wo: Linear::new(format!("{prefix}.attn.wo"), d_model, d_model),
            fc1: Linear::new(format!("{prefix}.mlp.fc1"), d_model, hidden),
            fc2: Linear::new(format!("{prefix}.mlp.fc2"), hidden, d_model),
            causal,
        }
    }

    pub fn register(&self, store: &mut ParamStore, seed: u64) -> Result<(), NumericsError> {
        self.norm1.register(store)?;
        self.norm2.register(store)?;
        for linear in [&self.wq, &self.wk, &self.wv, &self.wo, &self.fc1, &self.fc2] {
            linear.register(store, seed)?;
        }
        Ok(())
    }

    pub fn forward(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        x: NodeId,
    ) -> Result<NodeId, NumericsError> {
        let t = graph.value(x).rows();
        let normed = self.norm1.forward(graph, store, x)?;
        let q = self.wq.forward(graph, store, normed)?;
        let k = self.wk.forward(graph, store, normed)?;
        let v = self.wv.forward(graph, store, normed)?;

        let head_dim = self.d_model / self.heads;
        let scale = 1.0 / (head_dim as f64).sqrt();
        let mask = self.causal.then(|| graph.causal_mask(t));

        let mut head_outputs = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let qh = graph.slice_cols(q, h * head_dim, head_dim);
            let kh = graph.slice_cols(k, h * head_dim, head_dim);
            let vh = graph.slice_cols(v, h * head_dim, head_dim);
            let kt = graph.transpose(kh);
            let scores = graph.matmul(qh, kt);
            let scores = graph.scale(scores, scale);
            let scores = match mask {
                Some(m) => graph.add(scores, m),
                None => scores,
            };
            let attn = graph.softmax(scores);
            head_outputs.push(graph.matmul(attn, vh));
        }
        let merged = if head_outputs.len() == 1 {
            head_outputs[0]
        } else {
            graph.concat_cols(&head_outputs)
        };
        let attn_out = self.wo.forward(graph, store, merged)?;
        let x = graph.add(x, attn_out);

        let normed = self.norm2.forward(graph, store, x)?;
        let h = self.fc1.forward(graph, store, normed)?;
        let h = graph.gelu(h);
        let mlp_out = self.fc2.forward(graph, store, h)?;
        Ok(graph.add(x, mlp_out))
    }
}

/// Learned position embedding table of (max_len, dim), added to the first
/// `t` rows of a sequence.
#[derive(Debug, Clone)]
pub struct PositionEmbedding {
    pub path: String,
    pub max_len: usize,
    pub dim: usize,
}

impl PositionEmbedding {
    pub fn new(path: impl Into<String>, max_len: usize, dim: usize) -> Self {
        Self {
            path: path.into(),
            max_len,
            dim,
        }
    }

    pub fn register(&self, store: &mut ParamStore, seed: u64) -> Result<(), NumericsError> {
        let init = uniform_init(
            &[self.max_len, self.dim],
            0.02,
            derive_seed(seed, &self.path),
        );
        store.insert(&self.path, init, true)
    }

    pub fn forward(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        x: NodeId,
    ) -> Result<NodeId, NumericsError> {
        let t = graph.value(x).rows();
        assert!(
            t <= self.max_len,
            "sequence length {} exceeds max position {}",
            t,
            self.max_len
        );
        let table = graph.param(store, &self.path)?;
        let slice = graph.slice_rows(table, 0, t);
        Ok(graph.add(x, slice))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;

    #[test]
    fn linear_forward_matches_manual() {
        let mut store = ParamStore::new();
        let lin = Linear::new("l", 2, 3);
        lin.register(&mut store, 5).unwrap();
        let mut graph = Graph::new();
        let x = graph.constant(Tensor::new(vec![1, 2], vec![2.0, -1.0]));
        let y = lin.forward(&mut graph, &store, x).unwrap();
        let w = store.tensor("l.weight").unwrap();
        for j in 0..3 {
            let expected = 2.0 * w.at2(0, j) - 1.0 * w.at2(1, j);
            assert!((graph.value(y).at2(0, j) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn transformer_block_shapes_and_determinism() {
        let mut store = ParamStore::new();
        let block = TransformerBlock::new("blk", 8, 2, true);
        block.register(&mut store, 3).unwrap();
        let input = uniform_init(&[5, 8], 0.5, 77);
        let run = |store: &ParamStore| {
            let mut graph = Graph::new();
            let x = graph.constant(input.clone());
            let y = block.forward(&mut graph, store, x).unwrap();
            graph.value(y).clone()
        };
        let a = run(&store);
        assert_eq!(a.shape(), &[5, 8]);
        assert_eq!(a, run(&store));
    }

    #[test]
    fn transformer_block_gradients_check_out() {
        let mut store = ParamStore::new();
        let block = TransformerBlock::new("blk", 4, 2, false);
        block.register(&mut store, 11).unwrap();
        let input = uniform_init(&[3, 4], 0.8, 13);
        let target = uniform_init(&[3, 4], 0.8, 14);
        let block2 = block.clone();
        let f = move |graph: &mut Graph, store: &ParamStore| -> NodeId {
            let x = graph.constant(input.clone());
            let y = block2.forward(graph, store, x).unwrap();
            let t = graph.constant(target.clone());
            graph.mse_loss(y, t)
        };
        for leaf in [
            "blk.attn.wq.weight",
            "blk.attn.wo.bias",
            "blk.mlp.fc1.weight",
            "blk.norm1.gamma",
            "blk.norm2.beta",
        ] {
            let rel = grad_check(&f, &store, leaf, 1e-5).unwrap();
            assert!(rel < 1e-4, "{leaf}: {rel}");
        }
    }
}

//! Define-by-run reverse-mode differentiation over [`Tensor`] values.
//!
//! A [`Graph`] records every forward op eagerly; `backward` walks the tape in
//! reverse creation order. Gradients are only computed for nodes that
//! transitively depend on a trainable leaf, so subgraphs built from frozen
//! parameters (e.g. a frozen encoder) route no gradients at all.

use std::collections::BTreeMap;

use super::params::ParamStore;
use super::tensor::{
    bilinear_resize, gelu, gelu_grad, half_pixel_source, layernorm_stats, softmax_rows, Tensor,
};
use crate::NumericsError;

pub const LAYERNORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Scale(NodeId, f64),
    Gelu(NodeId),
    LayerNorm {
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
    },
    Softmax(NodeId),
    Embedding {
        table: NodeId,
        ids: Vec<usize>,
    },
    ConcatRows(Vec<NodeId>),
    ConcatCols(Vec<NodeId>),
    SliceRows {
        src: NodeId,
        start: usize,
    },
    SliceCols {
        src: NodeId,
        start: usize,
    },
    Transpose(NodeId),
    BilinearResize(NodeId),
    Reshape(NodeId),
    MseLoss(NodeId, NodeId),
    CrossEntropy {
        logits: NodeId,
        targets: Vec<(usize, usize)>,
    },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
    bound: BTreeMap<String, NodeId>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn constant(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Leaf, false)
    }

    pub fn leaf(&mut self, t: Tensor, requires_grad: bool) -> NodeId {
        self.push(t, Op::Leaf, requires_grad)
    }

    /// Bind a named parameter leaf. Repeated binds of the same path return the
    /// same node so gradient contributions accumulate in one place.
    pub fn param(&mut self, store: &ParamStore, path: &str) -> Result<NodeId, NumericsError> {
        if let Some(&id) = self.bound.get(path) {
            return Ok(id);
        }
        let param = store.get(path)?;
        let id = self.leaf(param.value.clone(), param.trainable);
        self.bound.insert(path.to_string(), id);
        Ok(id)
    }

    pub fn bound_paths(&self) -> impl Iterator<Item = (&str, NodeId)> {
        self.bound.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.value(a).matmul(self.value(b));
        let rg = self.needs(a) || self.needs(b);
        self.push(value, Op::MatMul(a, b), rg)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.value(a).add(self.value(b));
        let rg = self.needs(a) || self.needs(b);
        self.push(value, Op::Add(a, b), rg)
    }

    /// (T, D) + (D,) bias broadcast over rows.
    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> NodeId {
        let x = self.value(a);
        let b = self.value(bias);
        assert_eq!(x.shape().len(), 2);
        assert_eq!(b.shape(), &[x.cols()]);
        let (t, d) = (x.rows(), x.cols());
        let mut out = x.data().to_vec();
        for row in 0..t {
            for col in 0..d {
                out[row * d + col] += b.data()[col];
            }
        }
        let rg = self.needs(a) || self.needs(bias);
        self.push(Tensor::new(vec![t, d], out), Op::AddBias(a, bias), rg)
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let value = self.value(a).scale(c);
        let rg = self.needs(a);
        self.push(value, Op::Scale(a, c), rg)
    }

    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(gelu);
        let rg = self.needs(a);
        self.push(value, Op::Gelu(a), rg)
    }

    /// Row-wise layer norm with affine parameters, over the last dim of a 2-D input.
    pub fn layernorm(&mut self, x: NodeId, gamma: NodeId, beta: NodeId) -> NodeId {
        let xv = self.value(x);
        assert_eq!(xv.shape().len(), 2);
        let (t, d) = (xv.rows(), xv.cols());
        let g = self.value(gamma);
        let b = self.value(beta);
        assert_eq!(g.shape(), &[d]);
        assert_eq!(b.shape(), &[d]);
        let mut out = vec![0.0; t * d];
        for row in 0..t {
            let src = &xv.data()[row * d..(row + 1) * d];
            let (mean, rstd) = layernorm_stats(src, LAYERNORM_EPS);
            for col in 0..d {
                let xhat = (src[col] - mean) * rstd;
                out[row * d + col] = g.data()[col] * xhat + b.data()[col];
            }
        }
        let rg = self.needs(x) || self.needs(gamma) || self.needs(beta);
        self.push(Tensor::new(vec![t, d], out), Op::LayerNorm { x, gamma, beta }, rg)
    }

    pub fn softmax(&mut self, a: NodeId) -> NodeId {
        let value = softmax_rows(self.value(a));
        let rg = self.needs(a);
        self.push(value, Op::Softmax(a), rg)
    }

    /// Gather rows of `table` (V, D) by id, yielding (len(ids), D).
    pub fn embedding(&mut self, table: NodeId, ids: &[usize]) -> NodeId {
        let tv = self.value(table);
        assert_eq!(tv.shape().len(), 2);
        let (v, d) = (tv.rows(), tv.cols());
        let mut out = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            assert!(id < v, "embedding id {} out of vocab {}", id, v);
            out.extend_from_slice(&tv.data()[id * d..(id + 1) * d]);
        }
        let rg = self.needs(table);
        self.push(
            Tensor::new(vec![ids.len(), d], out),
            Op::Embedding {
                table,
                ids: ids.to_vec(),
            },
            rg,
        )
    }

    /// Stack 2-D inputs with equal column counts along the row axis.
    /// Zero-row inputs are permitted.
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty());
        let d = self.value(parts[0]).cols();
        let mut out = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            assert_eq!(v.cols(), d, "concat_rows column mismatch");
            rows += v.rows();
            out.extend_from_slice(v.data());
        }
        let rg = parts.iter().any(|&p| self.needs(p));
        self.push(Tensor::new(vec![rows, d], out), Op::ConcatRows(parts.to_vec()), rg)
    }

    /// Stack 2-D inputs with equal row counts along the column axis.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty());
        let t = self.value(parts[0]).rows();
        let widths: Vec<usize> = parts.iter().map(|&p| self.value(p).cols()).collect();
        let d: usize = widths.iter().sum();
        let mut out = vec![0.0; t * d];
        let mut offset = 0;
        for (&p, &w) in parts.iter().zip(widths.iter()) {
            let v = self.value(p);
            assert_eq!(v.rows(), t, "concat_cols row mismatch");
            for row in 0..t {
                out[row * d + offset..row * d + offset + w]
                    .copy_from_slice(&v.data()[row * w..(row + 1) * w]);
            }
            offset += w;
        }
        let rg = parts.iter().any(|&p| self.needs(p));
        self.push(Tensor::new(vec![t, d], out), Op::ConcatCols(parts.to_vec()), rg)
    }

    pub fn slice_rows(&mut self, src: NodeId, start: usize, len: usize) -> NodeId {
        let v = self.value(src);
        let (t, d) = (v.rows(), v.cols());
        assert!(start + len <= t, "slice_rows {}+{} > {}", start, len, t);
        let out = v.data()[start * d..(start + len) * d].to_vec();
        let rg = self.needs(src);
        self.push(Tensor::new(vec![len, d], out), Op::SliceRows { src, start }, rg)
    }

    pub fn slice_cols(&mut self, src: NodeId, start: usize, len: usize) -> NodeId {
        let v = self.value(src);
        let (t, d) = (v.rows(), v.cols());
        assert!(start + len <= d, "slice_cols {}+{} > {}", start, len, d);
        let mut out = Vec::with_capacity(t * len);
        for row in 0..t {
            out.extend_from_slice(&v.data()[row * d + start..row * d + start + len]);
        }
        let rg = self.needs(src);
        self.push(Tensor::new(vec![t, len], out), Op::SliceCols { src, start }, rg)
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).transposed();
        let rg = self.needs(a);
        self.push(value, Op::Transpose(a), rg)
    }

    /// Half-pixel-center bilinear resize of an (H, W, C) node.
    pub fn bilinear_resize(&mut self, a: NodeId, out_h: usize, out_w: usize) -> NodeId {
        let value = bilinear_resize(self.value(a), out_h, out_w);
        let rg = self.needs(a);
        self.push(value, Op::BilinearResize(a), rg)
    }

    pub fn reshape(&mut self, a: NodeId, shape: &[usize]) -> NodeId {
        let value = self.value(a).reshaped(shape);
        let rg = self.needs(a);
        self.push(value, Op::Reshape(a), rg)
    }

    /// Mean squared error over all elements; scalar output.
    pub fn mse_loss(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let av = self.value(a);
        let bv = self.value(b);
        assert_eq!(av.shape(), bv.shape(), "mse_loss shape mismatch");
        let n = av.numel() as f64;
        let sum: f64 = av
            .data()
            .iter()
            .zip(bv.data().iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        let rg = self.needs(a) || self.needs(b);
        self.push(Tensor::scalar(sum / n), Op::MseLoss(a, b), rg)
    }

    /// Mean negative log-likelihood over (row, class) targets of a logits matrix.
    pub fn cross_entropy(&mut self, logits: NodeId, targets: &[(usize, usize)]) -> NodeId {
        assert!(!targets.is_empty(), "cross_entropy with no targets");
        let lv = self.value(logits);
        let (t, v) = (lv.rows(), lv.cols());
        let probs = softmax_rows(lv);
        let mut sum = 0.0;
        for &(row, class) in targets {
            assert!(row < t && class < v, "cross_entropy target out of range");
            sum -= probs.at2(row, class).ln();
        }
        let rg = self.needs(logits);
        self.push(
            Tensor::scalar(sum / targets.len() as f64),
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
            },
            rg,
        )
    }

    /// (T, T) additive causal mask: 0 on and below the diagonal, -inf above.
    pub fn causal_mask(&mut self, t: usize) -> NodeId {
        let mut m = vec![0.0; t * t];
        for i in 0..t {
            for j in (i + 1)..t {
                m[i * t + j] = f64::NEG_INFINITY;
            }
        }
        self.constant(Tensor::new(vec![t, t], m))
    }

    fn accumulate(&mut self, id: NodeId, delta: Tensor) {
        if !self.needs(id) {
            return;
        }
        match &mut self.grads[id.0] {
            Some(g) => {
                assert_eq!(g.shape(), delta.shape());
                for (a, b) in g.data_mut().iter_mut().zip(delta.data().iter()) {
                    *a += b;
                }
            }
            slot @ None => *slot = Some(delta),
        }
    }

    /// Reverse sweep from a scalar loss node. Gradients for nodes that do not
    /// depend on a trainable leaf are never materialized.
    pub fn backward(&mut self, loss: NodeId) {
        assert_eq!(self.value(loss).numel(), 1, "backward on non-scalar");
        self.grads = (0..self.nodes.len()).map(|_| None).collect();
        if !self.needs(loss) {
            return;
        }
        self.grads[loss.0] = Some(Tensor::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let Some(grad) = self.grads[idx].clone() else {
                continue;
            };
            self.backprop_node(idx, grad);
        }
    }

    fn backprop_node(&mut self, idx: usize, grad: Tensor) {
        // Ops reference only earlier nodes, so borrowing values before the
        // accumulate calls is safe.
        match &self.nodes[idx].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (a, b) = (*a, *b);
                let da = grad.matmul(&self.value(b).transposed());
                let db = self.value(a).transposed().matmul(&grad);
                self.accumulate(a, da);
                self.accumulate(b, db);
            }
            Op::Add(a, b) => {
                let (a, b) = (*a, *b);
                self.accumulate(a, grad.clone());
                self.accumulate(b, grad);
            }
            Op::AddBias(a, bias) => {
                let (a, bias) = (*a, *bias);
                let (t, d) = (grad.rows(), grad.cols());
                let mut db = vec![0.0; d];
                for row in 0..t {
                    for col in 0..d {
                        db[col] += grad.at2(row, col);
                    }
                }
                self.accumulate(a, grad);
                self.accumulate(bias, Tensor::new(vec![d], db));
            }
            Op::Scale(a, c) => {
                let (a, c) = (*a, *c);
                self.accumulate(a, grad.scale(c));
            }
            Op::Gelu(a) => {
                let a = *a;
                let x = self.value(a);
                let data = x
                    .data()
                    .iter()
                    .zip(grad.data().iter())
                    .map(|(&xi, &gi)| gi * gelu_grad(xi))
                    .collect();
                let da = Tensor::new(x.shape().to_vec(), data);
                self.accumulate(a, da);
            }
            Op::LayerNorm { x, gamma, beta } => {
                let (x, gamma, beta) = (*x, *gamma, *beta);
                let xv = self.value(x);
                let gv = self.value(gamma);
                let (t, d) = (xv.rows(), xv.cols());
                let mut dx = vec![0.0; t * d];
                let mut dgamma = vec![0.0; d];
                let mut dbeta = vec![0.0; d];
                for row in 0..t {
                    let src = &xv.data()[row * d..(row + 1) * d];
                    let (mean, rstd) = layernorm_stats(src, LAYERNORM_EPS);
                    let gr = &grad.data()[row * d..(row + 1) * d];
                    let mut sum_dxhat = 0.0;
                    let mut sum_dxhat_xhat = 0.0;
                    for col in 0..d {
                        let xhat = (src[col] - mean) * rstd;
                        let dxhat = gr[col] * gv.data()[col];
                        dgamma[col] += gr[col] * xhat;
                        dbeta[col] += gr[col];
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * xhat;
                    }
                    let inv_d = 1.0 / d as f64;
                    for col in 0..d {
                        let xhat = (src[col] - mean) * rstd;
                        let dxhat = gr[col] * gv.data()[col];
                        dx[row * d + col] =
                            rstd * (dxhat - inv_d * sum_dxhat - xhat * inv_d * sum_dxhat_xhat);
                    }
                }
                self.accumulate(x, Tensor::new(vec![t, d], dx));
                self.accumulate(gamma, Tensor::new(vec![d], dgamma));
                self.accumulate(beta, Tensor::new(vec![d], dbeta));
            }
            Op::Softmax(a) => {
                let a = *a;
                let s = &self.nodes[idx].value;
                let (t, d) = (s.rows(), s.cols());
                let mut dx = vec![0.0; t * d];
                for row in 0..t {
                    let sr = &s.data()[row * d..(row + 1) * d];
                    let gr = &grad.data()[row * d..(row + 1) * d];
                    let dot: f64 = sr.iter().zip(gr.iter()).map(|(si, gi)| si * gi).sum();
                    for col in 0..d {
                        dx[row * d + col] = sr[col] * (gr[col] - dot);
                    }
                }
                self.accumulate(a, Tensor::new(vec![t, d], dx));
            }
            Op::Embedding { table, ids } => {
                let table = *table;
                let ids = ids.clone();
                let tv = self.value(table);
                let (v, d) = (tv.rows(), tv.cols());
                let mut dt = vec![0.0; v * d];
                for (l, &id) in ids.iter().enumerate() {
                    for col in 0..d {
                        dt[id * d + col] += grad.at2(l, col);
                    }
                }
                self.accumulate(table, Tensor::new(vec![v, d], dt));
            }
            Op::ConcatRows(parts) => {
                let parts = parts.clone();
                let d = grad.cols();
                let mut start = 0;
                for p in parts {
                    let rows = self.value(p).rows();
                    let slice =
                        grad.data()[start * d..(start + rows) * d].to_vec();
                    self.accumulate(p, Tensor::new(vec![rows, d], slice));
                    start += rows;
                }
            }
            Op::ConcatCols(parts) => {
                let parts = parts.clone();
                let (t, d) = (grad.rows(), grad.cols());
                let mut offset = 0;
                for p in parts {
                    let w = self.value(p).cols();
                    let mut dp = Vec::with_capacity(t * w);
                    for row in 0..t {
                        dp.extend_from_slice(&grad.data()[row * d + offset..row * d + offset + w]);
                    }
                    self.accumulate(p, Tensor::new(vec![t, w], dp));
                    offset += w;
                }
            }
            Op::SliceRows { src, start } => {
                let (src, start) = (*src, *start);
                let sv = self.value(src);
                let (t, d) = (sv.rows(), sv.cols());
                let mut ds = Tensor::zeros(&[t, d]);
                let len = grad.rows();
                ds.data_mut()[start * d..(start + len) * d].copy_from_slice(grad.data());
                self.accumulate(src, ds);
            }
            Op::SliceCols { src, start } => {
                let (src, start) = (*src, *start);
                let sv = self.value(src);
                let (t, d) = (sv.rows(), sv.cols());
                let mut ds = Tensor::zeros(&[t, d]);
                let w = grad.cols();
                for row in 0..t {
                    for col in 0..w {
                        ds.data_mut()[row * d + start + col] = grad.at2(row, col);
                    }
                }
                self.accumulate(src, ds);
            }
            Op::Transpose(a) => {
                let a = *a;
                self.accumulate(a, grad.transposed());
            }
            Op::BilinearResize(a) => {
                let a = *a;
                let src_shape = self.value(a).shape().to_vec();
                let (h, w, c) = (src_shape[0], src_shape[1], src_shape[2]);
                let out_shape = self.nodes[idx].value.shape().to_vec();
                let (oh, ow) = (out_shape[0], out_shape[1]);
                let mut ds = vec![0.0; h * w * c];
                for oy in 0..oh {
                    let (y0, y1, fy) = half_pixel_source(oy, h, oh);
                    for ox in 0..ow {
                        let (x0, x1, fx) = half_pixel_source(ox, w, ow);
                        let w00 = (1.0 - fy) * (1.0 - fx);
                        let w01 = (1.0 - fy) * fx;
                        let w10 = fy * (1.0 - fx);
                        let w11 = fy * fx;
                        for ch in 0..c {
                            let g = grad.data()[(oy * ow + ox) * c + ch];
                            ds[(y0 * w + x0) * c + ch] += g * w00;
                            ds[(y0 * w + x1) * c + ch] += g * w01;
                            ds[(y1 * w + x0) * c + ch] += g * w10;
                            ds[(y1 * w + x1) * c + ch] += g * w11;
                        }
                    }
                }
                self.accumulate(a, Tensor::new(vec![h, w, c], ds));
            }
            Op::Reshape(a) => {
                let a = *a;
                let shape = self.value(a).shape().to_vec();
                self.accumulate(a, grad.reshaped(&shape));
            }
            Op::MseLoss(a, b) => {
                let (a, b) = (*a, *b);
                let g = grad.item();
                let av = self.value(a);
                let bv = self.value(b);
                let n = av.numel() as f64;
                let diff: Vec<f64> = av
                    .data()
                    .iter()
                    .zip(bv.data().iter())
                    .map(|(x, y)| 2.0 * (x - y) / n * g)
                    .collect();
                let shape = av.shape().to_vec();
                let da = Tensor::new(shape.clone(), diff.clone());
                let db = Tensor::new(shape, diff.iter().map(|v| -v).collect());
                self.accumulate(a, da);
                self.accumulate(b, db);
            }
            Op::CrossEntropy { logits, targets } => {
                let logits = *logits;
                let targets = targets.clone();
                let g = grad.item() / targets.len() as f64;
                let lv = self.value(logits);
                let (t, v) = (lv.rows(), lv.cols());
                let probs = softmax_rows(lv);
                let mut dl = vec![0.0; t * v];
                for &(row, class) in &targets {
                    for col in 0..v {
                        let p = probs.at2(row, col);
                        let indicator = if col == class { 1.0 } else { 0.0 };
                        dl[row * v + col] += g * (p - indicator);
                    }
                }
                self.accumulate(logits, Tensor::new(vec![t, v], dl));
            }
        }
    }

    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    pub fn grad_by_path(&self, path: &str) -> Option<&Tensor> {
        self.bound.get(path).and_then(|&id| self.grad(id))
    }
}

//! Dense row-major tensors over 64-bit floats.
//!
//! Everything downstream (encoders, projectors, the decoder) is written
//! against this minimal kernel. Shapes are explicit, there is no implicit
//! broadcasting except where an op documents it, and all arithmetic is f64.

use serde::{Deserialize, Serialize};

/// Dense n-dimensional array, row-major, f64.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        let numel: usize = shape.iter().product();
        assert_eq!(
            numel,
            data.len(),
            "shape {:?} implies {} elements, got {}",
            shape,
            numel,
            data.len()
        );
        Self { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; numel],
        }
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let numel = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; numel],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Single scalar value of a 1-element tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape);
        self.data[0]
    }

    pub fn rows(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "rows() on shape {:?}", self.shape);
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "cols() on shape {:?}", self.shape);
        self.shape[1]
    }

    pub fn at2(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.shape[1] + c]
    }

    pub fn set2(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.shape[1] + c] = v;
    }

    /// Reinterpret the buffer under a new shape with the same element count.
    pub fn reshaped(&self, shape: &[usize]) -> Tensor {
        let numel: usize = shape.iter().product();
        assert_eq!(numel, self.numel(), "reshape {:?} -> {:?}", self.shape, shape);
        Tensor::new(shape.to_vec(), self.data.clone())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Matrix product of two 2-D tensors, (m,k) x (k,n) -> (m,n).
    pub fn matmul(&self, rhs: &Tensor) -> Tensor {
        assert_eq!(self.shape.len(), 2, "matmul lhs shape {:?}", self.shape);
        assert_eq!(rhs.shape.len(), 2, "matmul rhs shape {:?}", rhs.shape);
        let (m, k) = (self.shape[0], self.shape[1]);
        let (k2, n) = (rhs.shape[0], rhs.shape[1]);
        assert_eq!(k, k2, "matmul inner dims {} vs {}", k, k2);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let row = &rhs.data[p * n..(p + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row.iter()) {
                    *d += a * b;
                }
            }
        }
        Tensor::new(vec![m, n], out)
    }

    /// Transpose of a 2-D tensor.
    pub fn transposed(&self) -> Tensor {
        assert_eq!(self.shape.len(), 2, "transpose on shape {:?}", self.shape);
        let (m, n) = (self.shape[0], self.shape[1]);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = self.data[i * n + j];
            }
        }
        Tensor::new(vec![n, m], out)
    }

    pub fn add(&self, rhs: &Tensor) -> Tensor {
        assert_eq!(self.shape, rhs.shape, "add shape mismatch");
        let data = self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| a + b)
            .collect();
        Tensor::new(self.shape.clone(), data)
    }

    pub fn scale(&self, c: f64) -> Tensor {
        let data = self.data.iter().map(|a| a * c).collect();
        Tensor::new(self.shape.clone(), data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        let data = self.data.iter().map(|&a| f(a)).collect();
        Tensor::new(self.shape.clone(), data)
    }
}

/// GELU, tanh approximation. The derivative used by the reverse pass is the
/// exact derivative of this same formula, so gradient checks are tight.
pub fn gelu(x: f64) -> f64 {
    const C: f64 = 0.7978845608028654; // sqrt(2/pi)
    0.5 * x * (1.0 + (C * (x + 0.044715 * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    const C: f64 = 0.7978845608028654;
    let u = C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    let du = C * (1.0 + 3.0 * 0.044715 * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
}

/// Row-wise softmax of a 2-D tensor. `-inf` entries map to exactly 0.
pub fn softmax_rows(x: &Tensor) -> Tensor {
    assert_eq!(x.shape().len(), 2, "softmax on shape {:?}", x.shape());
    let (m, n) = (x.shape()[0], x.shape()[1]);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &x.data()[i * n..(i + 1) * n];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dst = &mut out[i * n..(i + 1) * n];
        let mut sum = 0.0;
        for (d, &v) in dst.iter_mut().zip(row.iter()) {
            let e = (v - max).exp();
            *d = e;
            sum += e;
        }
        for d in dst.iter_mut() {
            *d /= sum;
        }
    }
    Tensor::new(vec![m, n], out)
}

/// Per-row layer normalization statistics: (mean, 1/sqrt(var + eps)).
pub fn layernorm_stats(row: &[f64], eps: f64) -> (f64, f64) {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, 1.0 / (var + eps).sqrt())
}

/// Linear interpolation structured so that `t == 0` returns `a` bitwise and a
/// constant field is reproduced exactly.
#[inline]
pub fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Source coordinate and blend weight for one output index under the
/// half-pixel-center convention, clamped to the valid range.
///
/// Returns (lo, hi, frac) with `lo <= hi < size` and `frac in [0, 1)`.
pub fn half_pixel_source(d: usize, size_in: usize, size_out: usize) -> (usize, usize, f64) {
    let ratio = size_in as f64 / size_out as f64;
    let s = (d as f64 + 0.5) * ratio - 0.5;
    let s = s.clamp(0.0, (size_in - 1) as f64);
    let lo = s.floor() as usize;
    let hi = (lo + 1).min(size_in - 1);
    (lo, hi, s - lo as f64)
}

/// Bilinear resize of an (H, W, C) tensor to (out_h, out_w, C) using the
/// half-pixel-center convention. Same-size resize is a bitwise identity.
pub fn bilinear_resize(src: &Tensor, out_h: usize, out_w: usize) -> Tensor {
    let shape = src.shape();
    assert_eq!(shape.len(), 3, "bilinear_resize expects (H, W, C), got {:?}", shape);
    let (h, w, c) = (shape[0], shape[1], shape[2]);
    assert!(h >= 1 && w >= 1 && out_h >= 1 && out_w >= 1);
    let mut out = vec![0.0; out_h * out_w * c];
    for oy in 0..out_h {
        let (y0, y1, fy) = half_pixel_source(oy, h, out_h);
        for ox in 0..out_w {
            let (x0, x1, fx) = half_pixel_source(ox, w, out_w);
            for ch in 0..c {
                let v00 = src.data()[(y0 * w + x0) * c + ch];
                let v01 = src.data()[(y0 * w + x1) * c + ch];
                let v10 = src.data()[(y1 * w + x0) * c + ch];
                let v11 = src.data()[(y1 * w + x1) * c + ch];
                let top = lerp(v00, v01, fx);
                let bot = lerp(v10, v11, fx);
                out[(oy * out_w + ox) * c + ch] = lerp(top, bot, fy);
            }
        }
    }
    Tensor::new(vec![out_h, out_w, c], out)
}

//! Token sequences with per-token provenance.

use serde::{Deserialize, Serialize};

use crate::numerics::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamSource {
    Flat,
    Hier,
    Text,
}

impl StreamSource {
    pub fn label(&self) -> &'static str {
        match self {
            StreamSource::Flat => "flat",
            StreamSource::Hier => "hier",
            StreamSource::Text => "text",
        }
    }
}

/// Where a token came from: encoder, source frame, grid position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: StreamSource,
    /// Index of the frame in the source video.
    pub frame_index: usize,
    pub row: usize,
    pub col: usize,
    pub is_row_token: bool,
}

/// Ordered token embeddings plus one provenance record per token.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenStream {
    pub tokens: Tensor,
    pub provenance: Vec<Provenance>,
}

impl TokenStream {
    pub fn new(tokens: Tensor, provenance: Vec<Provenance>) -> Self {
        assert_eq!(tokens.shape().len(), 2, "token stream must be (T, D)");
        assert_eq!(
            tokens.shape()[0],
            provenance.len(),
            "token/provenance length mismatch"
        );
        Self { tokens, provenance }
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            tokens: Tensor::zeros(&[0, dim]),
            provenance: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.tokens.shape()[1]
    }

    pub fn count_source(&self, source: StreamSource) -> usize {
        self.provenance.iter().filter(|p| p.source == source).count()
    }

    pub fn count_row_tokens(&self) -> usize {
        self.provenance.iter().filter(|p| p.is_row_token).count()
    }

    /// Tokens per (source, frame_index), in first-appearance order.
    pub fn per_frame_counts(&self) -> Vec<(StreamSource, usize, usize)> {
        let mut counts: Vec<(StreamSource, usize, usize)> = Vec::new();
        for p in &self.provenance {
            match counts.iter_mut().find(|(s, f, _)| *s == p.source && *f == p.frame_index) {
                Some((_, _, c)) => *c += 1,
                None => counts.push((p.source, p.frame_index, 1)),
            }
        }
        counts
    }
}

/// Provenance records for one pooled grid laid out row-major with a row token
/// after each row: (row, 0..w) content then (row, w) row token.
pub fn grid_provenance(
    source: StreamSource,
    frame_index: usize,
    pooled_h: usize,
    pooled_w: usize,
) -> Vec<Provenance> {
    let mut out = Vec::with_capacity(pooled_h * (pooled_w + 1));
    for row in 0..pooled_h {
        for col in 0..pooled_w {
            out.push(Provenance {
                source,
                frame_index,
                row,
                col,
                is_row_token: false,
            });
        }
        out.push(Provenance {
            source,
            frame_index,
            row,
            col: pooled_w,
            is_row_token: true,
        });
    }
    out
}

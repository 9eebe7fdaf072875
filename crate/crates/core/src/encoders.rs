//! Two toy vision encoders that honor the structural contracts of the token
//! pipeline: a flat patch encoder (semantic stream) and a four-stage
//! hierarchical encoder (spatial stream) with progressive downsampling and a
//! widening channel ladder.
//!
//! Internals are deliberately minimal but fully differentiable: the flat
//! encoder is patchify + pre-norm attention blocks, the hierarchical encoder
//! is a stem convolution followed by one strided convolution + GELU per
//! stage. Every convolution has kernel == stride, so output grids follow the
//! same integer-division chain as [`crate::budget::grid_side`].

use thiserror::Error;

use crate::budget::{grid_side, BudgetError, EncoderGeometry};
use crate::nn::{Linear, PositionEmbedding, TransformerBlock};
use crate::numerics::{Graph, NodeId, ParamStore, Tensor};
use crate::NumericsError;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("frame is {got_h}x{got_w} but the geometry expects {expected}x{expected}")]
    GeometryMismatch {
        expected: usize,
        got_h: usize,
        got_w: usize,
    },
    #[error("expected frames of shape (N, H, W, C), got {0:?}")]
    BadFrameShape(Vec<usize>),
    #[error("channel mismatch: encoder built for {expected}, frames have {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Rows of `(h, w, c)`-shaped `src` (viewed as `(h*w, c)`) that make up each
/// non-overlapping `k x k` patch, patch-major then pixel row-major.
fn patch_gather_ids(h: usize, w: usize, k: usize) -> Vec<usize> {
    let (gh, gw) = (h / k, w / k);
    let mut ids = Vec::with_capacity(gh * gw * k * k);
    for pr in 0..gh {
        for pc in 0..gw {
            for dy in 0..k {
                for dx in 0..k {
                    ids.push((pr * k + dy) * w + (pc * k + dx));
                }
            }
        }
    }
    ids
}

/// Convolution with kernel == stride over an (h, w, c_in) node: gather the
/// pixels of each patch, flatten per patch, apply a linear map, then GELU.
/// Returns an (h/k, w/k, c_out) node.
fn strided_conv(
    graph: &mut Graph,
    store: &ParamStore,
    input: NodeId,
    k: usize,
    c_in: usize,
    linear: &Linear,
) -> Result<NodeId, NumericsError> {
    let shape = graph.value(input).shape().to_vec();
    let (h, w) = (shape[0], shape[1]);
    let (gh, gw) = (h / k, w / k);
    let flat = graph.reshape(input, &[h * w, c_in]);
    let gathered = graph.embedding(flat, &patch_gather_ids(h, w, k));
    let patches = graph.reshape(gathered, &[gh * gw, k * k * c_in]);
    let out = linear.forward(graph, store, patches)?;
    let out = graph.gelu(out);
    Ok(graph.reshape(out, &[gh, gw, linear.out_dim]))
}

fn check_frames_shape(
    frames: &Tensor,
    input_size: usize,
    in_channels: usize,
) -> Result<usize, EncoderError> {
    let shape = frames.shape();
    if shape.len() != 4 {
        return Err(EncoderError::BadFrameShape(shape.to_vec()));
    }
    let (n, h, w, c) = (shape[0], shape[1], shape[2], shape[3]);
    if h != input_size || w != input_size {
        return Err(EncoderError::GeometryMismatch {
            expected: input_size,
            got_h: h,
            got_w: w,
        });
    }
    if c != in_channels {
        return Err(EncoderError::ChannelMismatch {
            expected: in_channels,
            got: c,
        });
    }
    Ok(n)
}

fn frame_slice(frames: &Tensor, index: usize) -> Tensor {
    let shape = frames.shape();
    let (h, w, c) = (shape[1], shape[2], shape[3]);
    let stride = h * w * c;
    Tensor::new(
        vec![h, w, c],
        frames.data()[index * stride..(index + 1) * stride].to_vec(),
    )
}

/// Single-resolution patch encoder: patchify, learned position embedding,
/// then `depth` pre-norm attention blocks. One token grid per frame.
#[derive(Debug, Clone)]
pub struct FlatEncoder {
    pub geometry: EncoderGeometry,
    pub in_channels: usize,
    pub embed_dim: usize,
    pub depth: usize,
    prefix: String,
    patch_embed: Linear,
    pos_embed: PositionEmbedding,
    blocks: Vec<TransformerBlock>,
}

impl FlatEncoder {
    pub fn new(
        prefix: impl Into<String>,
        geometry: EncoderGeometry,
        in_channels: usize,
        embed_dim: usize,
        depth: usize,
        heads: usize,
    ) -> Result<Self, EncoderError> {
        geometry.validate()?;
        if geometry.stage_strides.iter().any(|&s| s != 1) {
            return Err(EncoderError::Budget(BudgetError::InvalidGeometry(
                "flat encoder requires single-resolution geometry (all stage strides 1)".into(),
            )));
        }
        let prefix = prefix.into();
        let patch = geometry.patch_or_stem_stride;
        let grid = grid_side(&geometry, geometry.num_stages())?;
        Ok(Self {
            patch_embed: Linear::new(
                format!("{prefix}.patch_embed"),
                patch * patch * in_channels,
                embed_dim,
            ),
            pos_embed: PositionEmbedding::new(format!("{prefix}.pos_embed"), grid * grid, embed_dim),
            blocks: (0..depth)
                .map(|i| TransformerBlock::new(&format!("{prefix}.block{i}"), embed_dim, heads, false))
                .collect(),
            geometry,
            in_channels,
            embed_dim,
            depth,
            prefix,
        })
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn grid(&self) -> usize {
        grid_side(&self.geometry, self.geometry.num_stages()).expect("validated geometry")
    }

    /// Output shape for `n` frames without touching any weights.
    pub fn dry_run_shape(geometry: &EncoderGeometry, n: usize, embed_dim: usize) -> Result<Vec<usize>, BudgetError> {
        let g = grid_side(geometry, geometry.num_stages())?;
        Ok(vec![n, g, g, embed_dim])
    }

    pub fn register(&self, store: &mut ParamStore, seed: u64) -> Result<(), NumericsError> {
        self.patch_embed.register(store, seed)?;
        self.pos_embed.register(store, seed)?;
        for block in &self.blocks {
            block.register(store, seed)?;
        }
        Ok(())
    }

    /// Encode one (H, W, C) frame to a (g, g, embed_dim) grid node.
    pub fn encode_frame(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        frame: &Tensor,
    ) -> Result<NodeId, EncoderError> {
        let g = self.grid();
        let patch = self.geometry.patch_or_stem_stride;
        let shape = frame.shape();
        if shape.len() != 3 || shape[0] != self.geometry.input_size || shape[1] != self.geometry.input_size
        {
            return Err(EncoderError::GeometryMismatch {
                expected: self.geometry.input_size,
                got_h: shape.first().copied().unwrap_or(0),
                got_w: shape.get(1).copied().unwrap_or(0),
            });
        }
        let input = graph.constant(frame.clone());
        let flat = graph.reshape(input, &[shape[0] * shape[1], shape[2]]);
        let gathered = graph.embedding(flat, &patch_gather_ids(shape[0], shape[1], patch));
        let patches = graph.reshape(gathered, &[g * g, patch * patch * self.in_channels]);
        let mut x = self.patch_embed.forward(graph, store, patches)?;
        x = self.pos_embed.forward(graph, store, x)?;
        for block in &self.blocks {
            x = block.forward(graph, store, x)?;
        }
        Ok(graph.reshape(x, &[g, g, self.embed_dim]))
    }

    /// Encode a batch of frames (N, H, W, C) to (N, g, g, embed_dim).
    /// An empty batch passes through with the correct shape.
    pub fn encode(&self, store: &ParamStore, frames: &Tensor) -> Result<Tensor, EncoderError> {
        let n = check_frames_shape(frames, self.geometry.input_size, self.in_channels)?;
        let g = self.grid();
        let mut data = Vec::with_capacity(n * g * g * self.embed_dim);
        for i in 0..n {
            let mut graph = Graph::new();
            let grid = self.encode_frame(&mut graph, store, &frame_slice(frames, i))?;
            data.extend_from_slice(graph.value(grid).data());
        }
        Ok(Tensor::new(vec![n, g, g, self.embed_dim], data))
    }
}

/// Multi-stage hierarchical encoder: a stem convolution followed by one
/// strided convolution per stage. Spatial resolution shrinks with stage
/// depth while channel width grows; any stage can be tapped.
#[derive(Debug, Clone)]
pub struct HierEncoder {
    pub geometry: EncoderGeometry,
    pub in_channels: usize,
    prefix: String,
    stem: Linear,
    stage_convs: Vec<Linear>,
}

impl HierEncoder {
    pub fn new(
        prefix: impl Into<String>,
        geometry: EncoderGeometry,
        in_channels: usize,
    ) -> Result<Self, EncoderError> {
        geometry.validate()?;
        let channels = &geometry.channels_per_stage;
        if !channels.windows(2).all(|w| w[0] < w[1]) {
            return Err(EncoderError::Budget(BudgetError::InvalidGeometry(
                "hierarchical channel widths must strictly increase with stage depth".into(),
            )));
        }
        let prefix = prefix.into();
        let stem_k = geometry.patch_or_stem_stride;
        let stem = Linear::new(
            format!("{prefix}.stem"),
            stem_k * stem_k * in_channels,
            channels[0],
        );
        let mut stage_convs = Vec::with_capacity(geometry.num_stages());
        for (i, &stride) in geometry.stage_strides.iter().enumerate() {
            let c_in = if i == 0 { channels[0] } else { channels[i - 1] };
            stage_convs.push(Linear::new(
                format!("{prefix}.stage{}", i + 1),
                stride * stride * c_in,
                channels[i],
            ));
        }
        Ok(Self {
            geometry,
            in_channels,
            prefix,
            stem,
            stage_convs,
        })
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn stage_channels(&self, s_stage: usize) -> Result<usize, BudgetError> {
        if s_stage == 0 || s_stage > self.geometry.num_stages() {
            return Err(BudgetError::InvalidStage {
                stage: s_stage,
                stages: self.geometry.num_stages(),
            });
        }
        Ok(self.geometry.channels_per_stage[s_stage - 1])
    }

    /// Output shape of the tap at `s_stage` for `n` frames, no weights needed.
    pub fn dry_run_shape(
        geometry: &EncoderGeometry,
        n: usize,
        s_stage: usize,
    ) -> Result<Vec<usize>, BudgetError> {
        let g = grid_side(geometry, s_stage)?;
        Ok(vec![n, g, g, geometry.channels_per_stage[s_stage - 1]])
    }

    pub fn register(&self, store: &mut ParamStore, seed: u64) -> Result<(), NumericsError> {
        self.stem.register(store, seed)?;
        for conv in &self.stage_convs {
            conv.register(store, seed)?;
        }
        Ok(())
    }

    /// Encode one (H, W, C) frame, returning the (g_s, g_s, C_s) tap node at
    /// the 1-based stage `s_stage`.
    pub fn encode_frame(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        frame: &Tensor,
        s_stage: usize,
    ) -> Result<NodeId, EncoderError> {
        self.stage_channels(s_stage)?;
        let shape = frame.shape();
        if shape.len() != 3 || shape[0] != self.geometry.input_size || shape[1] != self.geometry.input_size
        {
            return Err(EncoderError::GeometryMismatch {
                expected: self.geometry.input_size,
                got_h: shape.first().copied().unwrap_or(0),
                got_w: shape.get(1).copied().unwrap_or(0),
            });
        }
        let input = graph.constant(frame.clone());
        let mut x = strided_conv(
            graph,
            store,
            input,
            self.geometry.patch_or_stem_stride,
            self.in_channels,
            &self.stem,
        )?;
        let channels = &self.geometry.channels_per_stage;
        for stage in 1..=s_stage {
            let c_in = if stage == 1 { channels[0] } else { channels[stage - 2] };
            x = strided_conv(
                graph,
                store,
                x,
                self.geometry.stage_strides[stage - 1],
                c_in,
                &self.stage_convs[stage - 1],
            )?;
        }
        Ok(x)
    }

    /// Encode a batch (N, H, W, C) to (N, g_s, g_s, C_s) at `s_stage`.
    pub fn encode(
        &self,
        store: &ParamStore,
        frames: &Tensor,
        s_stage: usize,
    ) -> Result<Tensor, EncoderError> {
        let n = check_frames_shape(frames, self.geometry.input_size, self.in_channels)?;
        let g = grid_side(&self.geometry, s_stage)?;
        let c = self.stage_channels(s_stage)?;
        let mut data = Vec::with_capacity(n * g * g * c);
        for i in 0..n {
            let mut graph = Graph::new();
            let tap = self.encode_frame(&mut graph, store, &frame_slice(frames, i), s_stage)?;
            data.extend_from_slice(graph.value(tap).data());
        }
        Ok(Tensor::new(vec![n, g, g, c], data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::uniform_init;

    fn toy_flat_encoder() -> (FlatEncoder, ParamStore) {
        let enc = FlatEncoder::new("flat_encoder", EncoderGeometry::toy_flat(), 3, 8, 2, 2).unwrap();
        let mut store = ParamStore::new();
        enc.register(&mut store, 1).unwrap();
        (enc, store)
    }

    fn toy_hier_encoder() -> (HierEncoder, ParamStore) {
        let enc = HierEncoder::new("hier_encoder", EncoderGeometry::toy_hier(), 3).unwrap();
        let mut store = ParamStore::new();
        enc.register(&mut store, 2).unwrap();
        (enc, store)
    }

    #[test]
    fn flat_encode_toy_shape() {
        let (enc, store) = toy_flat_encoder();
        let frames = uniform_init(&[2, 56, 56, 3], 0.5, 9);
        let out = enc.encode(&store, &frames).unwrap();
        assert_eq!(out.shape(), &[2, 14, 14, 8]);
    }

    #[test]
    fn flat_encode_empty_batch() {
        let (enc, store) = toy_flat_encoder();
        let frames = Tensor::zeros(&[0, 56, 56, 3]);
        let out = enc.encode(&store, &frames).unwrap();
        assert_eq!(out.shape(), &[0, 14, 14, 8]);
    }

    #[test]
    fn flat_dry_run_paper_scale() {
        let shape = FlatEncoder::dry_run_shape(&EncoderGeometry::paper_flat(), 64, 1152).unwrap();
        assert_eq!(shape, vec![64, 27, 27, 1152]);
    }

    #[test]
    fn flat_encode_rejects_wrong_size() {
        let (enc, store) = toy_flat_encoder();
        let frames = Tensor::zeros(&[1, 48, 56, 3]);
        assert!(matches!(
            enc.encode(&store, &frames),
            Err(EncoderError::GeometryMismatch { .. })
        ));
    }

    #[test]
    fn hier_encode_stage_grids_match_budget_arithmetic() {
        let (enc, store) = toy_hier_encoder();
        let frames = uniform_init(&[1, 64, 64, 3], 0.5, 10);
        for stage in 1..=4 {
            let out = enc.encode(&store, &frames, stage).unwrap();
            let g = grid_side(&enc.geometry, stage).unwrap();
            let c = enc.geometry.channels_per_stage[stage - 1];
            assert_eq!(out.shape(), &[1, g, g, c], "stage {stage}");
        }
        // stage 4 on a 64 px input with stem 4: 16 / 1 / 2 / 2 / 2 = 2
        assert_eq!(grid_side(&enc.geometry, 4).unwrap(), 2);
        assert_eq!(grid_side(&enc.geometry, 1).unwrap(), 16);
    }

    #[test]
    fn hier_dry_run_paper_scale_stage4() {
        let shape = HierEncoder::dry_run_shape(&EncoderGeometry::paper_hier(), 32, 4).unwrap();
        assert_eq!(shape, vec![32, 32, 32, 896]);
    }

    #[test]
    fn hier_invalid_stage_is_error() {
        let (enc, store) = toy_hier_encoder();
        let frames = Tensor::zeros(&[1, 64, 64, 3]);
        assert!(enc.encode(&store, &frames, 5).is_err());
        assert!(enc.encode(&store, &frames, 0).is_err());
    }

    #[test]
    fn hier_rejects_non_increasing_channels() {
        let geom = EncoderGeometry::new(64, 4, vec![1, 2], vec![8, 8]).unwrap();
        assert!(HierEncoder::new("h", geom, 3).is_err());
    }

    #[test]
    fn encoders_are_deterministic() {
        let (enc, store) = toy_hier_encoder();
        let frames = uniform_init(&[2, 64, 64, 3], 0.5, 21);
        let a = enc.encode(&store, &frames, 3).unwrap();
        let b = enc.encode(&store, &frames, 3).unwrap();
        assert_eq!(a, b);

        let (fe, fstore) = toy_flat_encoder();
        let fframes = uniform_init(&[1, 56, 56, 3], 0.5, 22);
        assert_eq!(fe.encode(&fstore, &fframes).unwrap(), fe.encode(&fstore, &fframes).unwrap());
    }

    #[test]
    fn batch_equals_per_frame_concatenation() {
        let (enc, store) = toy_hier_encoder();
        let frames = uniform_init(&[3, 64, 64, 3], 0.5, 30);
        let batch = enc.encode(&store, &frames, 4).unwrap();
        for i in 0..3 {
            let single = frame_slice(&frames, i).reshaped(&[1, 64, 64, 3]);
            let one = enc.encode(&store, &single, 4).unwrap();
            let len = one.numel();
            assert_eq!(&batch.data()[i * len..(i + 1) * len], one.data());
        }
    }

    #[test]
    fn patch_gather_ids_cover_each_pixel_once_when_divisible() {
        let ids = patch_gather_ids(4, 4, 2);
        assert_eq!(ids.len(), 16);
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        assert!(sorted.iter().copied().eq(0..16));
        // first patch is the top-left 2x2 block
        assert_eq!(&ids[..4], &[0, 1, 4, 5]);
    }
}

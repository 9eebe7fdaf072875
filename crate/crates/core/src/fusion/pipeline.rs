//! End-to-end token pipeline: sample frames, encode both streams, pool each
//! grid, append learned row-end tokens, project into decoder space, and
//! concatenate flat-then-hier with provenance. Fusion itself is parameter
//! free.

use crate::budget::{
    compute_budget, pooled_side, TokenBudgetConfig, TokenBudgetReport, FLAT_POOL_STRIDE,
};
use crate::encoders::{FlatEncoder, HierEncoder};
use crate::numerics::{
    bilinear_resize, derive_seed, uniform_init, Graph, NodeId, ParamStore, Tensor,
};
use crate::sampler::FrameIndexPlan;

use super::decoder::{Decoder, DecoderConfig, GreedyOutput};
use super::projector::Projector;
use super::stream::{grid_provenance, Provenance, StreamSource, TokenStream};
use super::PipelineError;

pub const FLAT_ENCODER_PREFIX: &str = "flat_encoder";
pub const HIER_ENCODER_PREFIX: &str = "hier_encoder";
pub const FLAT_PROJECTOR_PREFIX: &str = "flat_projector";
pub const HIER_PROJECTOR_PREFIX: &str = "hier_projector";
pub const ROW_TOKENS_PREFIX: &str = "row_tokens";
pub const DECODER_PREFIX: &str = "decoder";
pub const ROW_TOKEN_FLAT_PATH: &str = "row_tokens.flat";
pub const ROW_TOKEN_HIER_PATH: &str = "row_tokens.hier";

/// Pool a (h, w, C) grid node by bilinear resize to the strided size, flatten
/// row-major, and append the learned `row_token` (1, C) node after each row.
/// Returns the (pooled_h * (pooled_w + 1), C) node and matching provenance.
pub fn pool_and_rowtokens(
    graph: &mut Graph,
    grid: NodeId,
    s_pool: usize,
    row_token: NodeId,
    source: StreamSource,
    frame_index: usize,
) -> (NodeId, Vec<Provenance>) {
    assert!(s_pool >= 1, "s_pool must be >= 1");
    let shape = graph.value(grid).shape().to_vec();
    assert_eq!(shape.len(), 3, "pool_and_rowtokens expects (h, w, C)");
    let (h, w, c) = (shape[0], shape[1], shape[2]);
    assert_eq!(graph.value(row_token).shape(), &[1, c], "row token dim mismatch");
    let (ph, pw) = (pooled_side(h, s_pool), pooled_side(w, s_pool));
    let pooled = graph.bilinear_resize(grid, ph, pw);
    let seq = graph.reshape(pooled, &[ph * pw, c]);
    let mut parts = Vec::with_capacity(2 * ph);
    for row in 0..ph {
        parts.push(graph.slice_rows(seq, row * pw, pw));
        parts.push(row_token);
    }
    let tokens = graph.concat_rows(&parts);
    (tokens, grid_provenance(source, frame_index, ph, pw))
}

/// Value-level pooling + row tokens, for callers that do not need gradients.
pub fn pool_and_rowtokens_value(
    grid: &Tensor,
    s_pool: usize,
    row_token: &Tensor,
    source: StreamSource,
    frame_index: usize,
) -> TokenStream {
    let mut graph = Graph::new();
    let g = graph.constant(grid.clone());
    let rt = graph.constant(row_token.clone());
    let (tokens, provenance) = pool_and_rowtokens(&mut graph, g, s_pool, rt, source, frame_index);
    TokenStream::new(graph.value(tokens).clone(), provenance)
}

/// Parameter-free fusion: all flat tokens, then all hier tokens.
pub fn fuse(flat: &TokenStream, hier: &TokenStream) -> Result<TokenStream, PipelineError> {
    if !flat.is_empty() && !hier.is_empty() && flat.dim() != hier.dim() {
        return Err(PipelineError::ShapeMismatch {
            expected: format!("(T, {})", flat.dim()),
            got: hier.tokens.shape().to_vec(),
        });
    }
    let dim = if flat.is_empty() { hier.dim() } else { flat.dim() };
    let mut data = Vec::with_capacity((flat.len() + hier.len()) * dim);
    data.extend_from_slice(flat.tokens.data());
    data.extend_from_slice(hier.tokens.data());
    let mut provenance = flat.provenance.clone();
    provenance.extend_from_slice(&hier.provenance);
    Ok(TokenStream::new(
        Tensor::new(vec![flat.len() + hier.len(), dim], data),
        provenance,
    ))
}

/// Rescale a square frame to the encoder input size and standardize each
/// channel to zero mean, unit variance.
pub fn preprocess_frame(frame: &Tensor, target_size: usize) -> Tensor {
    let shape = frame.shape();
    assert_eq!(shape.len(), 3, "preprocess expects (H, W, C)");
    let c = shape[2];
    let resized = bilinear_resize(frame, target_size, target_size);
    let pixels = target_size * target_size;
    let mut out = resized.into_data();
    for ch in 0..c {
        let mut mean = 0.0;
        for p in 0..pixels {
            mean += out[p * c + ch];
        }
        mean /= pixels as f64;
        let mut var = 0.0;
        for p in 0..pixels {
            let d = out[p * c + ch] - mean;
            var += d * d;
        }
        var /= pixels as f64;
        let denom = var.sqrt() + 1e-6;
        for p in 0..pixels {
            out[p * c + ch] = (out[p * c + ch] - mean) / denom;
        }
    }
    Tensor::new(vec![target_size, target_size, c], out)
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub budget: TokenBudgetConfig,
    pub in_channels: usize,
    pub flat_embed_dim: usize,
    pub flat_depth: usize,
    pub flat_heads: usize,
    pub d_model: usize,
    /// Hidden width of both projectors; defaults to 4 * d_model.
    pub projector_hidden: usize,
    pub decoder: DecoderConfig,
}

impl PipelineConfig {
    /// Toy scale: 56 px flat / 64 px hier geometry, 2 + 1 frames, runs in
    /// milliseconds.
    pub fn toy() -> Self {
        let budget = TokenBudgetConfig {
            n_total: 2,
            n_hiera: 1,
            s_stage: 4,
            s_pool: 2,
            geom_flat: crate::budget::EncoderGeometry::toy_flat(),
            geom_hier: crate::budget::EncoderGeometry::toy_hier(),
        };
        Self::toy_with_budget(budget)
    }

    pub fn toy_with_budget(budget: TokenBudgetConfig) -> Self {
        let d_model = 16;
        Self {
            budget,
            in_channels: 3,
            flat_embed_dim: 16,
            flat_depth: 2,
            flat_heads: 2,
            d_model,
            projector_hidden: 4 * d_model,
            decoder: DecoderConfig::toy(d_model),
        }
    }
}

/// Fused-stream result of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub stream: TokenStream,
    pub plan: FrameIndexPlan,
    pub report: TokenBudgetReport,
}

/// The full dual-encoder pipeline bound to one configuration.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: PipelineConfig,
    pub flat_encoder: FlatEncoder,
    pub hier_encoder: HierEncoder,
    pub flat_projector: Projector,
    pub hier_projector: Projector,
    pub decoder: Decoder,
}

impl Model {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.budget.validate()?;
        let flat_encoder = FlatEncoder::new(
            FLAT_ENCODER_PREFIX,
            config.budget.geom_flat.clone(),
            config.in_channels,
            config.flat_embed_dim,
            config.flat_depth,
            config.flat_heads,
        )?;
        let hier_encoder = HierEncoder::new(
            HIER_ENCODER_PREFIX,
            config.budget.geom_hier.clone(),
            config.in_channels,
        )?;
        let tap_channels = hier_encoder.stage_channels(config.budget.s_stage)?;
        let flat_projector = Projector::new(
            FLAT_PROJECTOR_PREFIX,
            config.flat_embed_dim,
            config.projector_hidden,
            config.d_model,
        );
        let hier_projector = Projector::new(
            HIER_PROJECTOR_PREFIX,
            tap_channels,
            config.projector_hidden,
            config.d_model,
        );
        let decoder = Decoder::new(DECODER_PREFIX, config.decoder.clone());
        Ok(Self {
            config,
            flat_encoder,
            hier_encoder,
            flat_projector,
            hier_projector,
            decoder,
        })
    }

    /// Seeded parameter store covering every component. Projector weights are
    /// Xavier-initialized; row tokens are small uniform vectors, one learned
    /// token per encoder.
    pub fn init_params(&self, seed: u64) -> Result<ParamStore, PipelineError> {
        let mut store = ParamStore::new();
        self.flat_encoder.register(&mut store, seed)?;
        self.hier_encoder.register(&mut store, seed)?;
        self.flat_projector.register(&mut store, seed)?;
        self.hier_projector.register(&mut store, seed)?;
        self.decoder.register(&mut store, seed)?;
        let tap_channels = self.hier_projector.in_dim;
        store.insert(
            ROW_TOKEN_FLAT_PATH,
            uniform_init(
                &[1, self.config.flat_embed_dim],
                0.02,
                derive_seed(seed, ROW_TOKEN_FLAT_PATH),
            ),
            true,
        )?;
        store.insert(
            ROW_TOKEN_HIER_PATH,
            uniform_init(&[1, tap_channels], 0.02, derive_seed(seed, ROW_TOKEN_HIER_PATH)),
            true,
        )?;
        Ok(store)
    }

    pub fn expected_report(&self) -> Result<TokenBudgetReport, PipelineError> {
        Ok(compute_budget(&self.config.budget)?)
    }

    fn video_frame(&self, video: &Tensor, index: usize) -> Tensor {
        let shape = video.shape();
        let (h, w, c) = (shape[1], shape[2], shape[3]);
        let stride = h * w * c;
        Tensor::new(
            vec![h, w, c],
            video.data()[index * stride..(index + 1) * stride].to_vec(),
        )
    }

    fn check_video(&self, video: &Tensor) -> Result<FrameIndexPlan, PipelineError> {
        let shape = video.shape();
        if shape.len() != 4 || shape[1] != shape[2] || shape[3] != self.config.in_channels {
            return Err(PipelineError::ShapeMismatch {
                expected: format!("(F, S, S, {})", self.config.in_channels),
                got: shape.to_vec(),
            });
        }
        Ok(FrameIndexPlan::new(
            shape[0],
            self.config.budget.n_total,
            self.config.budget.n_hiera,
        )?)
    }

    /// Projected flat-stream tokens for the planned frames.
    pub fn flat_stream_on_graph(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        video: &Tensor,
        plan: &FrameIndexPlan,
    ) -> Result<(NodeId, Vec<Provenance>), PipelineError> {
        let row_flat = graph.param(store, ROW_TOKEN_FLAT_PATH)?;
        let mut parts = Vec::new();
        let mut provenance = Vec::new();
        for &frame_index in &plan.flat_indices {
            let frame = preprocess_frame(
                &self.video_frame(video, frame_index),
                self.flat_encoder.geometry.input_size,
            );
            let grid = self.flat_encoder.encode_frame(graph, store, &frame)?;
            let (tokens, prov) = pool_and_rowtokens(
                graph,
                grid,
                FLAT_POOL_STRIDE,
                row_flat,
                StreamSource::Flat,
                frame_index,
            );
            parts.push(tokens);
            provenance.extend(prov);
        }
        let tokens = graph.concat_rows(&parts);
        let projected = self.flat_projector.project(graph, store, tokens)?;
        Ok((projected, provenance))
    }

    /// Projected hier-stream tokens for the planned frames. Empty plan gives
    /// no node. This is the stage-1 training path.
    pub fn hier_stream_on_graph(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        video: &Tensor,
        plan: &FrameIndexPlan,
    ) -> Result<Option<(NodeId, Vec<Provenance>)>, PipelineError> {
        if plan.hier_indices.is_empty() {
            return Ok(None);
        }
        let row_hier = graph.param(store, ROW_TOKEN_HIER_PATH)?;
        let mut parts = Vec::new();
        let mut provenance = Vec::new();
        for &frame_index in &plan.hier_indices {
            let frame = preprocess_frame(
                &self.video_frame(video, frame_index),
                self.hier_encoder.geometry.input_size,
            );
            let tap =
                self.hier_encoder
                    .encode_frame(graph, store, &frame, self.config.budget.s_stage)?;
            let (tokens, prov) = pool_and_rowtokens(
                graph,
                tap,
                self.config.budget.s_pool,
                row_hier,
                StreamSource::Hier,
                frame_index,
            );
            parts.push(tokens);
            provenance.extend(prov);
        }
        let tokens = graph.concat_rows(&parts);
        let projected = self.hier_projector.project(graph, store, tokens)?;
        Ok(Some((projected, provenance)))
    }

    /// Build the fused visual stream on a graph. `video` is (F, S, S, C) at
    /// any square size; frames are rescaled per encoder. Order is all flat
    /// tokens, then all hier tokens.
    pub fn forward_on_graph(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        video: &Tensor,
    ) -> Result<(NodeId, Vec<Provenance>, FrameIndexPlan), PipelineError> {
        let plan = self.check_video(video)?;
        let (flat_projected, mut provenance) =
            self.flat_stream_on_graph(graph, store, video, &plan)?;
        let fused = match self.hier_stream_on_graph(graph, store, video, &plan)? {
            Some((hier_projected, hier_prov)) => {
                provenance.extend(hier_prov);
                graph.concat_rows(&[flat_projected, hier_projected])
            }
            None => flat_projected,
        };
        Ok((fused, provenance, plan))
    }

    /// Value-level forward pass producing the fused stream, the frame plan,
    /// and the budget report the stream must agree with.
    pub fn forward(&self, store: &ParamStore, video: &Tensor) -> Result<ForwardOutput, PipelineError> {
        let mut graph = Graph::new();
        let (fused, provenance, plan) = self.forward_on_graph(&mut graph, store, video)?;
        let stream = TokenStream::new(graph.value(fused).clone(), provenance);
        Ok(ForwardOutput {
            stream,
            plan,
            report: self.expected_report()?,
        })
    }

    /// Next-token loss of `text_ids` given the fused visual stream of `video`.
    pub fn decode_loss(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        video: &Tensor,
        text_ids: &[usize],
    ) -> Result<NodeId, PipelineError> {
        let (fused, _, _) = self.forward_on_graph(graph, store, video)?;
        self.decoder.decode_loss(graph, store, Some(fused), text_ids)
    }

    /// Greedy generation conditioned on the fused visual stream.
    pub fn generate(
        &self,
        store: &ParamStore,
        video: &Tensor,
        prompt_ids: &[usize],
        max_len: usize,
        eos_id: usize,
    ) -> Result<GreedyOutput, PipelineError> {
        let out = self.forward(store, video)?;
        self.decoder
            .generate_greedy(store, Some(&out.stream.tokens), prompt_ids, max_len, eos_id)
    }
}

/// Check a fused stream against its budget report: exact length and
/// per-encoder counts, row tokens once per row at the end column.
pub fn verify_stream(stream: &TokenStream, report: &TokenBudgetReport) -> Result<(), PipelineError> {
    let t_flat = stream.count_source(StreamSource::Flat) as u64;
    let t_hier = stream.count_source(StreamSource::Hier) as u64;
    if t_flat != report.t_flat || t_hier != report.t_hier {
        return Err(PipelineError::CountMismatch {
            expected_flat: report.t_flat,
            expected_hier: report.t_hier,
            got_flat: t_flat,
            got_hier: t_hier,
        });
    }
    if stream.len() as u64 != report.total() {
        return Err(PipelineError::CountMismatch {
            expected_flat: report.t_flat,
            expected_hier: report.t_hier,
            got_flat: stream.len() as u64,
            got_hier: 0,
        });
    }
    for p in &stream.provenance {
        let pooled_w = match p.source {
            StreamSource::Flat => report.pooled_flat,
            StreamSource::Hier => report.pooled_hier,
            StreamSource::Text => continue,
        };
        let expected_row_token = p.col == pooled_w;
        if p.is_row_token != expected_row_token {
            return Err(PipelineError::ProvenanceInvalid(format!(
                "token at frame {} row {} col {} has is_row_token = {}",
                p.frame_index, p.row, p.col, p.is_row_token
            )));
        }
    }
    Ok(())
}

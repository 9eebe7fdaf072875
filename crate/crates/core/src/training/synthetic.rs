//! Deterministic synthetic datasets standing in for the real corpora.
//!
//! Scenes are procedurally built: a smooth background plus a known number of
//! bright blobs drifting across frames. Because scene content is planted,
//! gold answers are exact (spatial_qa) and regression targets are derivable
//! (alignment).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fusion::{pool_and_rowtokens_value, preprocess_frame, text, Model, StreamSource};
use crate::numerics::{derive_seed, gelu, seeded_rng, uniform_init, ParamStore, Tensor};

use super::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Regress projected spatial-stream tokens onto a fixed teacher stream.
    Alignment,
    /// Describe the scene in one deterministic caption.
    Captioning,
    /// Answer a counting question whose gold answer is planted in the scene.
    SpatialQa,
    /// Rationale-then-answer sequences: free text first, the answer last.
    Thinking,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::Alignment => "alignment",
            TaskKind::Captioning => "captioning",
            TaskKind::SpatialQa => "spatial_qa",
            TaskKind::Thinking => "thinking",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "alignment" => Some(TaskKind::Alignment),
            "captioning" => Some(TaskKind::Captioning),
            "spatial_qa" => Some(TaskKind::SpatialQa),
            "thinking" => Some(TaskKind::Thinking),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaskConfig {
    pub items: usize,
    pub frames: usize,
    pub frame_size: usize,
    pub channels: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            items: 8,
            frames: 4,
            frame_size: 32,
            channels: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticItem {
    pub frames: Tensor,
    pub prompt_ids: Vec<usize>,
    pub target_ids: Vec<usize>,
    /// Planted blob count; the exact-match gold answer for counting questions.
    pub blob_count: usize,
    /// Seed for this item's alignment noise component.
    pub noise_seed: u64,
}

impl SyntheticItem {
    /// Prompt followed by target: the text sequence the decoder trains on.
    pub fn text_ids(&self) -> Vec<usize> {
        let mut ids = self.prompt_ids.clone();
        ids.extend_from_slice(&self.target_ids);
        ids
    }

    pub fn gold_answer(&self) -> String {
        self.blob_count.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub kind: TaskKind,
    pub seed: u64,
    pub items: Vec<SyntheticItem>,
    /// Seeds the fixed teacher map used by alignment targets.
    pub teacher_seed: u64,
}

/// Smooth background plus `blob_count` drifting gaussian bumps, values in
/// [0, 1]. Deterministic in the seed.
pub fn synth_video(
    seed: u64,
    frames: usize,
    size: usize,
    channels: usize,
    blob_count: usize,
) -> Tensor {
    let mut rng = seeded_rng(seed);
    let mut blobs = Vec::with_capacity(blob_count);
    for _ in 0..blob_count {
        let x = rng.gen_range(0.15..0.85) * size as f64;
        let y = rng.gen_range(0.15..0.85) * size as f64;
        let radius = rng.gen_range(0.05..0.12) * size as f64;
        let dx = rng.gen_range(-0.02..0.02) * size as f64;
        let dy = rng.gen_range(-0.02..0.02) * size as f64;
        let color: Vec<f64> = (0..channels).map(|_| rng.gen_range(0.6..1.0)).collect();
        blobs.push((x, y, radius, dx, dy, color));
    }
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut data = vec![0.0; frames * size * size * channels];
    for f in 0..frames {
        for py in 0..size {
            for px in 0..size {
                for c in 0..channels {
                    let base = 0.15
                        + 0.1
                            * ((px as f64 / size as f64 * std::f64::consts::TAU + phase).sin()
                                * (py as f64 / size as f64 * std::f64::consts::PI).cos()
                                + 1.0)
                            / 2.0;
                    let mut value = base + 0.02 * c as f64;
                    for (bx, by, radius, dx, dy, color) in &blobs {
                        let cx = bx + dx * f as f64;
                        let cy = by + dy * f as f64;
                        let d2 = (px as f64 - cx).powi(2) + (py as f64 - cy).powi(2);
                        value += color[c] * (-d2 / (2.0 * radius * radius)).exp();
                    }
                    data[((f * size + py) * size + px) * channels + c] = value.clamp(0.0, 1.0);
                }
            }
        }
    }
    Tensor::new(vec![frames, size, size, channels], data)
}

fn counting_question() -> Vec<usize> {
    let mut ids = vec![text::BOS];
    ids.extend(text::encode("how many objects? "));
    ids
}

fn item_for(kind: TaskKind, item_seed: u64, config: &TaskConfig) -> SyntheticItem {
    let mut rng = seeded_rng(item_seed);
    let blob_count = rng.gen_range(1..=5usize);
    let frames = synth_video(
        derive_seed(item_seed, "video"),
        config.frames,
        config.frame_size,
        config.channels,
        blob_count,
    );
    let noise_seed = derive_seed(item_seed, "noise");
    let (prompt_ids, target_ids) = match kind {
        TaskKind::Alignment => (vec![text::BOS], vec![text::EOS]),
        TaskKind::Captioning => {
            let caption = format!("a scene with {blob_count} bright blobs");
            let mut target = text::encode(&caption);
            target.push(text::EOS);
            (vec![text::BOS], target)
        }
        TaskKind::SpatialQa => {
            let mut target = text::encode(&blob_count.to_string());
            target.push(text::EOS);
            (counting_question(), target)
        }
        TaskKind::Thinking => {
            let rationale = format!("i scan the scene for bright regions. {blob_count}");
            let mut target = text::encode(&rationale);
            target.push(text::EOS);
            (counting_question(), target)
        }
    };
    SyntheticItem {
        frames,
        prompt_ids,
        target_ids,
        blob_count,
        noise_seed,
    }
}

/// Deterministic dataset for one task kind: same seed, same items.
pub fn synthetic_task(kind: TaskKind, seed: u64, config: &TaskConfig) -> SyntheticTask {
    let items = (0..config.items)
        .map(|i| item_for(kind, derive_seed(seed, &format!("item{i}")), config))
        .collect();
    SyntheticTask {
        kind,
        seed,
        items,
        teacher_seed: derive_seed(seed, "teacher"),
    }
}

/// Alignment noise amplitude, relative to the per-item signal std. Keeps the
/// loss floor away from zero so a converged run re-run shows only a mild
/// further reduction, without ever swamping the learnable signal.
pub const ALIGNMENT_NOISE_RATIO: f64 = 0.4;

/// Regression target for the alignment task: the pooled (pre-projection)
/// spatial-stream tokens pushed through a fixed teacher — an independent
/// Xavier draw of the projector architecture itself, so the target is
/// reachable from the trainable projector's own initialization — plus
/// per-item noise scaled to the signal. Shape (t_hier, d_model), the
/// projected stream's shape.
pub fn alignment_target(
    model: &Model,
    store: &ParamStore,
    item: &SyntheticItem,
    teacher_seed: u64,
) -> Result<Tensor, TrainError> {
    let pooled = hier_pooled_tokens(model, store, &item.frames)?;
    let (t, c) = (pooled.shape()[0], pooled.shape()[1]);
    let d_model = model.config.d_model;
    let hidden = model.config.projector_hidden;
    let w1 = crate::numerics::xavier_init(&[c, hidden], derive_seed(teacher_seed, "w1"))?;
    let w2 = crate::numerics::xavier_init(&[hidden, d_model], derive_seed(teacher_seed, "w2"))?;
    let mut out = vec![0.0; t * d_model];
    for row in 0..t {
        let x = &pooled.data()[row * c..(row + 1) * c];
        let mut h = vec![0.0; hidden];
        for (j, slot) in h.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &xi) in x.iter().enumerate() {
                acc += xi * w1.at2(i, j);
            }
            *slot = gelu(acc);
        }
        for k in 0..d_model {
            let mut acc = 0.0;
            for (j, &hj) in h.iter().enumerate() {
                acc += hj * w2.at2(j, k);
            }
            out[row * d_model + k] = acc;
        }
    }
    let n = out.len() as f64;
    let mean = out.iter().sum::<f64>() / n;
    let var = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let signal_std = var.sqrt().max(1e-3);
    let noise = uniform_init(
        &[t, d_model],
        ALIGNMENT_NOISE_RATIO * signal_std,
        item.noise_seed,
    );
    for (o, n) in out.iter_mut().zip(noise.data().iter()) {
        *o += n;
    }
    Ok(Tensor::new(vec![t, d_model], out))
}

/// Pooled + row-token spatial-stream tokens (pre-projection), all hier frames
/// stacked: shape (t_hier, tap_channels). Uses the frozen encoder values.
pub fn hier_pooled_tokens(
    model: &Model,
    store: &ParamStore,
    video: &Tensor,
) -> Result<Tensor, TrainError> {
    let plan = crate::sampler::FrameIndexPlan::new(
        video.shape()[0],
        model.config.budget.n_total,
        model.config.budget.n_hiera,
    )?;
    let row_token = store.tensor(crate::fusion::ROW_TOKEN_HIER_PATH)?.clone();
    let c = row_token.cols();
    let mut data = Vec::new();
    let mut rows = 0;
    for &frame_index in &plan.hier_indices {
        let shape = video.shape();
        let stride = shape[1] * shape[2] * shape[3];
        let frame = Tensor::new(
            vec![shape[1], shape[2], shape[3]],
            video.data()[frame_index * stride..(frame_index + 1) * stride].to_vec(),
        );
        let frame = preprocess_frame(&frame, model.hier_encoder.geometry.input_size);
        let tap = model
            .hier_encoder
            .encode(store, &frame.reshaped(&[1, frame.shape()[0], frame.shape()[1], frame.shape()[2]]), model.config.budget.s_stage)?;
        let g = tap.shape()[1];
        let grid = Tensor::new(vec![g, g, tap.shape()[3]], tap.into_data());
        let stream = pool_and_rowtokens_value(
            &grid,
            model.config.budget.s_pool,
            &row_token,
            StreamSource::Hier,
            frame_index,
        );
        rows += stream.len();
        data.extend_from_slice(stream.tokens.data());
    }
    Ok(Tensor::new(vec![rows, c], data))
}

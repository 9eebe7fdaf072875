//! Stage execution: masked optimizer updates over the synthetic tasks, with
//! per-step loss logging.

use rand::seq::SliceRandom;

use crate::fusion::Model;
use crate::numerics::{seeded_rng, Graph, ParamStore, Tensor};

use super::optimizer::AdamW;
use super::schedule::StageSpec;
use super::synthetic::{alignment_target, SyntheticTask, TaskKind};
use super::TrainError;

/// Per-step losses of one stage run plus window summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct LossLog {
    pub entries: Vec<(usize, f64)>,
    /// Window length for the initial/final summaries: a tenth of the run,
    /// capped at 20 steps.
    pub window: usize,
}

impl LossLog {
    pub fn new(entries: Vec<(usize, f64)>) -> Self {
        let window = (entries.len() / 10).clamp(1, 20);
        Self { entries, window }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(TrainError::InvalidSpec("loss steps not increasing".into()));
        }
        if let Some(&(step, loss)) = self.entries.iter().find(|(_, l)| !l.is_finite()) {
            return Err(TrainError::Divergence { step, loss });
        }
        Ok(())
    }

    pub fn initial_window_mean(&self) -> f64 {
        let n = self.window.min(self.entries.len());
        self.entries[..n].iter().map(|(_, l)| l).sum::<f64>() / n as f64
    }

    pub fn final_window_mean(&self) -> f64 {
        let n = self.window.min(self.entries.len());
        let start = self.entries.len() - n;
        self.entries[start..].iter().map(|(_, l)| l).sum::<f64>() / n as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss\n");
        for (step, loss) in &self.entries {
            out.push_str(&format!("{step},{loss}\n"));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl RunOptions {
    pub fn new(steps: usize, seed: u64) -> Self {
        Self {
            steps,
            batch_size: 4,
            seed,
        }
    }
}

/// Run one stage: apply the stage's trainable mask, then take `steps`
/// optimizer updates on batches drawn from the task. Leaves outside the mask
/// are bitwise untouched. A non-finite loss aborts with the failing step.
pub fn run_stage(
    spec: &StageSpec,
    model: &Model,
    store: &mut ParamStore,
    task: &SyntheticTask,
    options: &RunOptions,
) -> Result<LossLog, TrainError> {
    assert!(options.steps >= 1, "steps must be >= 1");
    assert!(options.batch_size >= 1, "batch_size must be >= 1");
    spec.validate()?;
    store.apply_mask(&spec.trainable_prefixes, &spec.frozen_prefixes);

    // Alignment targets depend only on frozen leaves, so they are fixed for
    // the whole run.
    let targets: Vec<Option<Tensor>> = match task.kind {
        TaskKind::Alignment => task
            .items
            .iter()
            .map(|item| alignment_target(model, store, item, task.teacher_seed).map(Some))
            .collect::<Result<_, _>>()?,
        _ => vec![None; task.items.len()],
    };

    let mut optimizer = AdamW::new(spec.learning_rate);
    let mut rng = seeded_rng(options.seed);
    // epoch-shuffled cyclic batching: every item is visited once per epoch
    let mut order: Vec<usize> = (0..task.items.len()).collect();
    let mut cursor = order.len();
    let mut entries = Vec::with_capacity(options.steps);
    for step in 0..options.steps {
        let mut graph = Graph::new();
        let mut batch_loss: Option<crate::numerics::NodeId> = None;
        for _ in 0..options.batch_size {
            if cursor >= order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let index = order[cursor];
            cursor += 1;
            let item = &task.items[index];
            let loss = match task.kind {
                TaskKind::Alignment => {
                    let plan = crate::sampler::FrameIndexPlan::new(
                        item.frames.shape()[0],
                        model.config.budget.n_total,
                        model.config.budget.n_hiera,
                    )?;
                    let (projected, _) = model
                        .hier_stream_on_graph(&mut graph, store, &item.frames, &plan)?
                        .ok_or_else(|| {
                            TrainError::InvalidSpec(
                                "alignment task needs a non-empty hier stream".into(),
                            )
                        })?;
                    let target = graph.constant(targets[index].clone().expect("precomputed"));
                    graph.mse_loss(projected, target)
                }
                _ => model.decode_loss(&mut graph, store, &item.frames, &item.text_ids())?,
            };
            batch_loss = Some(match batch_loss {
                Some(acc) => graph.add(acc, loss),
                None => loss,
            });
        }
        let total = batch_loss.expect("batch_size >= 1");
        let mean = graph.scale(total, 1.0 / options.batch_size as f64);
        let loss_value = graph.value(mean).item();
        if !loss_value.is_finite() {
            return Err(TrainError::Divergence {
                step,
                loss: loss_value,
            });
        }
        graph.backward(mean);
        optimizer.step(store, &graph);
        entries.push((step, loss_value));
    }
    let log = LossLog::new(entries);
    log.validate()?;
    Ok(log)
}

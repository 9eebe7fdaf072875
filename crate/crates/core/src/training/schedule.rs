//! Staged training schedule: per-stage trainable masks, learning rates, and
//! epoch counts. Stage 1 calibrates only the hierarchical-stream projector;
//! later stages open the full model except the hierarchical encoder, which
//! stays frozen in every stage.

use serde::{Deserialize, Serialize};

use crate::fusion::{
    DECODER_PREFIX, FLAT_ENCODER_PREFIX, FLAT_PROJECTOR_PREFIX, HIER_ENCODER_PREFIX,
    HIER_PROJECTOR_PREFIX, ROW_TOKENS_PREFIX,
};

use super::synthetic::TaskKind;
use super::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageName {
    Stage1,
    Stage2,
    Stage3,
    Thinking,
}

impl StageName {
    pub fn as_str(&self) -> &'static str {
        match self {
            StageName::Stage1 => "stage-1",
            StageName::Stage2 => "stage-2",
            StageName::Stage3 => "stage-3",
            StageName::Thinking => "thinking",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stage-1" | "stage1" | "1" => Some(StageName::Stage1),
            "stage-2" | "stage2" | "2" => Some(StageName::Stage2),
            "stage-3" | "stage3" | "3" => Some(StageName::Stage3),
            "thinking" => Some(StageName::Thinking),
            _ => None,
        }
    }
}

impl std::fmt::Display for StageName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One training stage: what trains, at which rate, on which synthetic task.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageSpec {
    pub name: StageName,
    pub trainable_prefixes: Vec<String>,
    pub frozen_prefixes: Vec<String>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub dataset: TaskKind,
    /// The thinking stage is part of the schedule but not required.
    pub optional: bool,
}

impl StageSpec {
    pub fn validate(&self) -> Result<(), TrainError> {
        for t in &self.trainable_prefixes {
            if self.frozen_prefixes.contains(t) {
                return Err(TrainError::InvalidSpec(format!(
                    "prefix {t:?} is both trainable and frozen"
                )));
            }
        }
        if !self
            .frozen_prefixes
            .iter()
            .any(|p| p == HIER_ENCODER_PREFIX)
        {
            return Err(TrainError::InvalidSpec(
                "the hierarchical encoder must be frozen in every stage".into(),
            ));
        }
        if self.name == StageName::Stage1
            && self.trainable_prefixes != vec![HIER_PROJECTOR_PREFIX.to_string()]
        {
            return Err(TrainError::InvalidSpec(
                "stage-1 may train only the hierarchical projector".into(),
            ));
        }
        Ok(())
    }
}

fn full_model_except_hier_encoder() -> Vec<String> {
    vec![
        DECODER_PREFIX.to_string(),
        FLAT_ENCODER_PREFIX.to_string(),
        FLAT_PROJECTOR_PREFIX.to_string(),
        HIER_PROJECTOR_PREFIX.to_string(),
        ROW_TOKENS_PREFIX.to_string(),
    ]
}

/// The four-stage schedule: learning rates [1e-3, 1e-5, 1e-5, 1e-5], one
/// epoch each. Stage 1 trains the hierarchical projector alone; stages 2-4
/// train the full model except the hierarchical encoder.
pub fn build_stage_schedule() -> Vec<StageSpec> {
    let everything_else = vec![
        DECODER_PREFIX.to_string(),
        FLAT_ENCODER_PREFIX.to_string(),
        FLAT_PROJECTOR_PREFIX.to_string(),
        HIER_ENCODER_PREFIX.to_string(),
        ROW_TOKENS_PREFIX.to_string(),
    ];
    vec![
        StageSpec {
            name: StageName::Stage1,
            trainable_prefixes: vec![HIER_PROJECTOR_PREFIX.to_string()],
            frozen_prefixes: everything_else,
            learning_rate: 1e-3,
            epochs: 1,
            dataset: TaskKind::Alignment,
            optional: false,
        },
        StageSpec {
            name: StageName::Stage2,
            trainable_prefixes: full_model_except_hier_encoder(),
            frozen_prefixes: vec![HIER_ENCODER_PREFIX.to_string()],
            learning_rate: 1e-5,
            epochs: 1,
            dataset: TaskKind::Captioning,
            optional: false,
        },
        StageSpec {
            name: StageName::Stage3,
            trainable_prefixes: full_model_except_hier_encoder(),
            frozen_prefixes: vec![HIER_ENCODER_PREFIX.to_string()],
            learning_rate: 1e-5,
            epochs: 1,
            dataset: TaskKind::SpatialQa,
            optional: false,
        },
        StageSpec {
            name: StageName::Thinking,
            trainable_prefixes: full_model_except_hier_encoder(),
            frozen_prefixes: vec![HIER_ENCODER_PREFIX.to_string()],
            learning_rate: 1e-5,
            epochs: 1,
            dataset: TaskKind::Thinking,
            optional: true,
        },
    ]
}

pub fn stage_spec(name: StageName) -> StageSpec {
    build_stage_schedule()
        .into_iter()
        .find(|s| s.name == name)
        .expect("schedule covers all stage names")
}

//! Key-value config document (TOML) mirroring the token-budget configuration,
//! with an optional `[model]` table for toy forward-pass dimensions. Every
//! field is optional; values overlay a caller-supplied base configuration.

use serde::Deserialize;
use thiserror::Error;

use crate::budget::{EncoderGeometry, TokenBudgetConfig};
use crate::fusion::PipelineConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryDoc {
    pub input_size: Option<usize>,
    pub stride: Option<usize>,
    pub stage_strides: Option<Vec<usize>>,
    pub channels: Option<Vec<usize>>,
}

impl GeometryDoc {
    fn apply(&self, base: &EncoderGeometry) -> EncoderGeometry {
        EncoderGeometry {
            input_size: self.input_size.unwrap_or(base.input_size),
            patch_or_stem_stride: self.stride.unwrap_or(base.patch_or_stem_stride),
            stage_strides: self
                .stage_strides
                .clone()
                .unwrap_or_else(|| base.stage_strides.clone()),
            channels_per_stage: self
                .channels
                .clone()
                .unwrap_or_else(|| base.channels_per_stage.clone()),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub in_channels: Option<usize>,
    pub flat_embed_dim: Option<usize>,
    pub flat_depth: Option<usize>,
    pub flat_heads: Option<usize>,
    pub d_model: Option<usize>,
    pub projector_hidden: Option<usize>,
    pub decoder_layers: Option<usize>,
    pub decoder_heads: Option<usize>,
    pub max_seq: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub n_total: Option<usize>,
    pub n_hiera: Option<usize>,
    pub s_stage: Option<usize>,
    pub s_pool: Option<usize>,
    pub flat: Option<GeometryDoc>,
    pub hier: Option<GeometryDoc>,
    pub model: Option<ModelDoc>,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Overlay onto a base budget configuration. The result is not validated
    /// here; callers validate via [`TokenBudgetConfig::validate`].
    pub fn apply_budget(&self, base: &TokenBudgetConfig) -> TokenBudgetConfig {
        TokenBudgetConfig {
            n_total: self.n_total.unwrap_or(base.n_total),
            n_hiera: self.n_hiera.unwrap_or(base.n_hiera),
            s_stage: self.s_stage.unwrap_or(base.s_stage),
            s_pool: self.s_pool.unwrap_or(base.s_pool),
            geom_flat: self
                .flat
                .as_ref()
                .map_or_else(|| base.geom_flat.clone(), |g| g.apply(&base.geom_flat)),
            geom_hier: self
                .hier
                .as_ref()
                .map_or_else(|| base.geom_hier.clone(), |g| g.apply(&base.geom_hier)),
        }
    }

    /// Overlay onto a base pipeline configuration (budget fields included).
    pub fn apply_pipeline(&self, base: &PipelineConfig) -> PipelineConfig {
        let mut config = base.clone();
        config.budget = self.apply_budget(&base.budget);
        if let Some(model) = &self.model {
            if let Some(v) = model.in_channels {
                config.in_channels = v;
            }
            if let Some(v) = model.flat_embed_dim {
                config.flat_embed_dim = v;
            }
            if let Some(v) = model.flat_depth {
                config.flat_depth = v;
            }
            if let Some(v) = model.flat_heads {
                config.flat_heads = v;
            }
            if let Some(v) = model.d_model {
                config.d_model = v;
                config.decoder.d_model = v;
            }
            if let Some(v) = model.projector_hidden {
                config.projector_hidden = v;
            }
            if let Some(v) = model.decoder_layers {
                config.decoder.layers = v;
            }
            if let Some(v) = model.decoder_heads {
                config.decoder.heads = v;
            }
            if let Some(v) = model.max_seq {
                config.decoder.max_seq = v;
            }
        }
        config
    }
}

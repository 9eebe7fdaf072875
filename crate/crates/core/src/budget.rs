//! Token accounting over encoder geometries and the (n_hiera, s_stage, s_pool)
//! control triplet: grid sizes, per-frame and total token counts, the
//! semantic:spatial token ratio, and enumeration of feasible configurations
//! under a token budget.
//!
//! The flat (semantic) stream is always pooled with a fixed stride of
//! [`FLAT_POOL_STRIDE`]; the triplet's `s_pool` steers the hierarchical stream
//! only. Both streams use the same pooled + row-token accounting:
//! `per_frame = pooled_h * (pooled_w + 1)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pooling stride applied to the flat encoder's token grid. Fixed: the flat
/// stream is not part of the control triplet.
pub const FLAT_POOL_STRIDE: usize = 2;

/// Decimal places used when displaying the token ratio.
pub const RATIO_DISPLAY_PRECISION: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum BudgetError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("stage {stage} out of range 1..={stages}")]
    InvalidStage { stage: usize, stages: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("budget {budget} is below the flat per-frame cost {per_frame_flat}")]
    BudgetTooSmall { budget: u64, per_frame_flat: u64 },
}

/// Static description of an encoder's spatial resolution ladder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderGeometry {
    /// Pixels per side of the (square) input.
    pub input_size: usize,
    /// Patch size for a flat encoder, stem stride for a hierarchical one.
    pub patch_or_stem_stride: usize,
    /// Additional per-stage downsample factors. A flat encoder is a single
    /// stage with factor 1.
    pub stage_strides: Vec<usize>,
    /// Channel width per stage (informational).
    pub channels_per_stage: Vec<usize>,
}

impl EncoderGeometry {
    pub fn new(
        input_size: usize,
        patch_or_stem_stride: usize,
        stage_strides: Vec<usize>,
        channels_per_stage: Vec<usize>,
    ) -> Result<Self, BudgetError> {
        let geom = Self {
            input_size,
            patch_or_stem_stride,
            stage_strides,
            channels_per_stage,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<(), BudgetError> {
        if self.patch_or_stem_stride == 0 {
            return Err(BudgetError::InvalidGeometry("stride must be >= 1".into()));
        }
        if self.input_size / self.patch_or_stem_stride == 0 {
            return Err(BudgetError::InvalidGeometry(format!(
                "input {} smaller than stride {}",
                self.input_size, self.patch_or_stem_stride
            )));
        }
        if self.stage_strides.is_empty() {
            return Err(BudgetError::InvalidGeometry("stage_strides empty".into()));
        }
        if self.stage_strides.iter().any(|&s| s == 0) {
            return Err(BudgetError::InvalidGeometry(
                "stage strides must be >= 1".into(),
            ));
        }
        if self.channels_per_stage.len() != self.stage_strides.len() {
            return Err(BudgetError::InvalidGeometry(format!(
                "channel list length {} != stage count {}",
                self.channels_per_stage.len(),
                self.stage_strides.len()
            )));
        }
        // Every stage must keep at least one token per side.
        for stage in 1..=self.stage_strides.len() {
            if self.grid_side_unchecked(stage) == 0 {
                return Err(BudgetError::InvalidGeometry(format!(
                    "grid collapses to zero at stage {stage}"
                )));
            }
        }
        Ok(())
    }

    pub fn num_stages(&self) -> usize {
        self.stage_strides.len()
    }

    fn grid_side_unchecked(&self, stage: usize) -> usize {
        let mut side = self.input_size / self.patch_or_stem_stride;
        for &factor in &self.stage_strides[..stage] {
            side /= factor;
        }
        side
    }

    /// Paper-scale flat geometry: 384 px input, patch 14, single stage.
    pub fn paper_flat() -> Self {
        Self::new(384, 14, vec![1], vec![1152]).expect("paper flat geometry")
    }

    /// Paper-scale hierarchical geometry: 1024 px input, stem 4, four stages
    /// with strides [1, 2, 2, 2] and a doubling channel ladder.
    pub fn paper_hier() -> Self {
        Self::new(1024, 4, vec![1, 2, 2, 2], vec![112, 224, 448, 896]).expect("paper hier geometry")
    }

    /// Toy flat geometry: 56 px input, patch 4 (grid 14).
    pub fn toy_flat() -> Self {
        Self::new(56, 4, vec![1], vec![16]).expect("toy flat geometry")
    }

    /// Toy hierarchical geometry: 64 px input, stem 4, strides [1, 2, 2, 2].
    pub fn toy_hier() -> Self {
        Self::new(64, 4, vec![1, 2, 2, 2], vec![8, 16, 32, 64]).expect("toy hier geometry")
    }
}

/// Token grid side length at a 1-based stage: floor(input / stride), then
/// integer division by each stage factor up to and including `stage`.
pub fn grid_side(geom: &EncoderGeometry, stage: usize) -> Result<usize, BudgetError> {
    if stage == 0 || stage > geom.num_stages() {
        return Err(BudgetError::InvalidStage {
            stage,
            stages: geom.num_stages(),
        });
    }
    Ok(geom.grid_side_unchecked(stage))
}

/// Post-pooling side length: ceil(grid / s_pool). Stride 1 is the identity.
pub fn pooled_side(grid: usize, s_pool: usize) -> usize {
    assert!(grid >= 1 && s_pool >= 1, "pooled_side({grid}, {s_pool})");
    grid.div_ceil(s_pool)
}

/// Tokens per frame for a pooled grid: one learned row token is appended to
/// each of the `pooled_h` rows, so the count is `pooled_h * (pooled_w + 1)`.
pub fn tokens_per_frame(pooled_h: usize, pooled_w: usize) -> usize {
    assert!(pooled_h >= 1 && pooled_w >= 1);
    pooled_h * (pooled_w + 1)
}

/// The control triplet plus frame count and both encoder geometries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenBudgetConfig {
    /// Frames fed to the flat encoder.
    pub n_total: usize,
    /// Frames fed to the hierarchical encoder. Zero disables the hierarchical
    /// stream entirely (the report then carries no ratio).
    pub n_hiera: usize,
    /// 1-based hierarchical stage to tap features from.
    pub s_stage: usize,
    /// Pooling stride for the hierarchical stream.
    pub s_pool: usize,
    pub geom_flat: EncoderGeometry,
    pub geom_hier: EncoderGeometry,
}

impl TokenBudgetConfig {
    /// The configuration the default geometries are built around:
    /// (n_hiera, s_stage, s_pool) = (32, 4, 2) with 64 total frames.
    pub fn paper_default() -> Self {
        Self {
            n_total: 64,
            n_hiera: 32,
            s_stage: 4,
            s_pool: 2,
            geom_flat: EncoderGeometry::paper_flat(),
            geom_hier: EncoderGeometry::paper_hier(),
        }
    }

    pub fn validate(&self) -> Result<(), BudgetError> {
        self.geom_flat.validate()?;
        self.geom_hier.validate()?;
        if self.n_total == 0 {
            return Err(BudgetError::InvalidConfig("n_total must be >= 1".into()));
        }
        if self.n_hiera > self.n_total {
            return Err(BudgetError::InvalidConfig(format!(
                "n_hiera {} exceeds n_total {}",
                self.n_hiera, self.n_total
            )));
        }
        if self.s_stage == 0 || self.s_stage > self.geom_hier.num_stages() {
            return Err(BudgetError::InvalidStage {
                stage: self.s_stage,
                stages: self.geom_hier.num_stages(),
            });
        }
        if self.s_pool == 0 {
            return Err(BudgetError::InvalidConfig("s_pool must be >= 1".into()));
        }
        Ok(())
    }
}

/// Exact token accounting for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenBudgetReport {
    pub grid_flat: usize,
    pub grid_hier: usize,
    pub pooled_flat: usize,
    pub pooled_hier: usize,
    pub per_frame_flat: usize,
    pub per_frame_hier: usize,
    /// Total tokens from the flat (semantic) stream.
    pub t_flat: u64,
    /// Total tokens from the hierarchical (spatial) stream.
    pub t_hier: u64,
    /// t_flat / t_hier, full precision. None when the hierarchical stream is
    /// disabled.
    pub ratio: Option<f64>,
}

impl TokenBudgetReport {
    pub fn total(&self) -> u64 {
        self.t_flat + self.t_hier
    }

    /// Ratio rendered at the default display precision, "n/a" when undefined.
    pub fn ratio_display(&self) -> String {
        match self.ratio {
            Some(r) => format!("{:.*}", RATIO_DISPLAY_PRECISION, r),
            None => "n/a".to_string(),
        }
    }
}

/// Full token accounting for a validated configuration.
pub fn compute_budget(cfg: &TokenBudgetConfig) -> Result<TokenBudgetReport, BudgetError> {
    cfg.validate()?;
    let grid_flat = grid_side(&cfg.geom_flat, cfg.geom_flat.num_stages())?;
    let grid_hier = grid_side(&cfg.geom_hier, cfg.s_stage)?;
    let pooled_flat = pooled_side(grid_flat, FLAT_POOL_STRIDE);
    let pooled_hier = pooled_side(grid_hier, cfg.s_pool);
    let per_frame_flat = tokens_per_frame(pooled_flat, pooled_flat);
    let per_frame_hier = tokens_per_frame(pooled_hier, pooled_hier);
    let t_flat = (cfg.n_total * per_frame_flat) as u64;
    let t_hier = (cfg.n_hiera * per_frame_hier) as u64;
    let ratio = (t_hier > 0).then(|| t_flat as f64 / t_hier as f64);
    Ok(TokenBudgetReport {
        grid_flat,
        grid_hier,
        pooled_flat,
        pooled_hier,
        per_frame_flat,
        per_frame_hier,
        t_flat,
        t_hier,
        ratio,
    })
}

/// All (n_hiera, s_stage, s_pool) triplets whose total stays within
/// `budget_max_tokens`, with n_hiera in 1..=n_total, s_stage over the
/// hierarchical stages, and s_pool in 1..=grid(s_stage).
///
/// Sorted by descending t_hier, then ascending total, then ascending triplet.
pub fn enumerate_configs(
    budget_max_tokens: u64,
    geom_flat: &EncoderGeometry,
    geom_hier: &EncoderGeometry,
    n_total: usize,
) -> Result<Vec<(TokenBudgetConfig, TokenBudgetReport)>, BudgetError> {
    geom_flat.validate()?;
    geom_hier.validate()?;
    let grid_flat = grid_side(geom_flat, geom_flat.num_stages())?;
    let pooled_flat = pooled_side(grid_flat, FLAT_POOL_STRIDE);
    let per_frame_flat = tokens_per_frame(pooled_flat, pooled_flat) as u64;
    if budget_max_tokens < per_frame_flat {
        return Err(BudgetError::BudgetTooSmall {
            budget: budget_max_tokens,
            per_frame_flat,
        });
    }
    let mut feasible = Vec::new();
    for s_stage in 1..=geom_hier.num_stages() {
        let grid = grid_side(geom_hier, s_stage)?;
        for s_pool in 1..=grid {
            for n_hiera in 1..=n_total {
                let cfg = TokenBudgetConfig {
                    n_total,
                    n_hiera,
                    s_stage,
                    s_pool,
                    geom_flat: geom_flat.clone(),
                    geom_hier: geom_hier.clone(),
                };
                let report = compute_budget(&cfg)?;
                if report.total() <= budget_max_tokens {
                    feasible.push((cfg, report));
                }
            }
        }
    }
    feasible.sort_by(|(ca, ra), (cb, rb)| {
        rb.t_hier
            .cmp(&ra.t_hier)
            .then(ra.total().cmp(&rb.total()))
            .then((ca.n_hiera, ca.s_stage, ca.s_pool).cmp(&(cb.n_hiera, cb.s_stage, cb.s_pool)))
    });
    Ok(feasible)
}

/// Aligned plain-text rendering of one report.
pub fn render_report_text(cfg: &TokenBudgetConfig, report: &TokenBudgetReport) -> String {
    let rows: Vec<(&str, String)> = vec![
        ("frames (flat)", cfg.n_total.to_string()),
        ("frames (hier)", cfg.n_hiera.to_string()),
        ("stage tap", cfg.s_stage.to_string()),
        ("pool stride (hier)", cfg.s_pool.to_string()),
        ("grid flat", report.grid_flat.to_string()),
        ("grid hier", report.grid_hier.to_string()),
        ("pooled flat", report.pooled_flat.to_string()),
        ("pooled hier", report.pooled_hier.to_string()),
        ("tokens/frame flat", report.per_frame_flat.to_string()),
        ("tokens/frame hier", report.per_frame_hier.to_string()),
        ("semantic stream tokens", report.t_flat.to_string()),
        ("spatial stream tokens", report.t_hier.to_string()),
        ("total tokens", report.total().to_string()),
        ("token ratio", report.ratio_display()),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (key, value) in rows {
        out.push_str(&format!("{key:<width$}  {value}\n"));
    }
    out
}

pub const REPORT_CSV_HEADER: &str = "n_total,n_hiera,s_stage,s_pool,grid_flat,grid_hier,pooled_flat,pooled_hier,per_frame_flat,per_frame_hier,t_flat,t_hier,total,ratio";

/// One CSV row matching [`REPORT_CSV_HEADER`]. Ratio is emitted full precision.
pub fn render_report_csv_row(cfg: &TokenBudgetConfig, report: &TokenBudgetReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        cfg.n_total,
        cfg.n_hiera,
        cfg.s_stage,
        cfg.s_pool,
        report.grid_flat,
        report.grid_hier,
        report.pooled_flat,
        report.pooled_hier,
        report.per_frame_flat,
        report.per_frame_hier,
        report.t_flat,
        report.t_hier,
        report.total(),
        report.ratio.map_or("n/a".to_string(), |r| r.to_string())
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_side_flat_paper() {
        // floor(384 / 14) = 27, single stage of stride 1
        let geom = EncoderGeometry::paper_flat();
        assert_eq!(grid_side(&geom, 1).unwrap(), 27);
    }

    #[test]
    fn grid_side_hier_paper_stages() {
        // 1024/4 = 256, then /1 /2 /2 /2
        let geom = EncoderGeometry::paper_hier();
        assert_eq!(grid_side(&geom, 1).unwrap(), 256);
        assert_eq!(grid_side(&geom, 2).unwrap(), 128);
        assert_eq!(grid_side(&geom, 3).unwrap(), 64);
        assert_eq!(grid_side(&geom, 4).unwrap(), 32);
    }

    #[test]
    fn grid_side_rejects_out_of_range_stage() {
        let geom = EncoderGeometry::paper_hier();
        assert_eq!(
            grid_side(&geom, 5).unwrap_err(),
            BudgetError::InvalidStage { stage: 5, stages: 4 }
        );
        assert!(grid_side(&geom, 0).is_err());
    }

    #[test]
    fn pooled_side_is_ceiling_division() {
        assert_eq!(pooled_side(27, 2), 14);
        assert_eq!(pooled_side(32, 2), 16);
        assert_eq!(pooled_side(32, 1), 32);
        // brute-force ceil oracle over a small domain
        for grid in 1..=40 {
            for s in 1..=40 {
                let naive = (0..grid).step_by(s).count();
                assert_eq!(pooled_side(grid, s), naive, "grid {grid} s {s}");
            }
        }
    }

    #[test]
    fn tokens_per_frame_row_token_accounting() {
        // 13,440 / 64 frames = 210 = 14 x 15; 8,704 / 32 = 272 = 16 x 17
        assert_eq!(tokens_per_frame(14, 14), 210);
        assert_eq!(tokens_per_frame(16, 16), 272);
        assert_eq!(tokens_per_frame(1, 1), 2);
    }

    #[test]
    fn compute_budget_default_config() {
        let report = compute_budget(&TokenBudgetConfig::paper_default()).unwrap();
        assert_eq!(report.t_flat, 13_440);
        assert_eq!(report.t_hier, 8_704);
        assert_eq!(report.ratio_display(), "1.54");
        assert_eq!(report.total(), 22_144);
    }

    #[test]
    fn compute_budget_all_hier_frames() {
        let cfg = TokenBudgetConfig {
            n_hiera: 64,
            ..TokenBudgetConfig::paper_default()
        };
        let report = compute_budget(&cfg).unwrap();
        assert_eq!(report.t_hier, 272 * 64);
        assert_eq!(report.t_hier, 17_408);
        let ratio = report.ratio.unwrap();
        assert!((ratio - 13_440.0 / 17_408.0).abs() < 1e-12);
        assert_eq!(format!("{ratio:.3}"), "0.772");
    }

    #[test]
    fn compute_budget_coarser_pooling() {
        let cfg = TokenBudgetConfig {
            s_pool: 4,
            ..TokenBudgetConfig::paper_default()
        };
        let report = compute_budget(&cfg).unwrap();
        // pooled 8x8 -> 8x9 = 72 per frame, 72 * 32 frames
        assert_eq!(report.per_frame_hier, 72);
        assert_eq!(report.t_hier, 2_304);
    }

    #[test]
    fn compute_budget_disabled_hier_stream() {
        let cfg = TokenBudgetConfig {
            n_hiera: 0,
            ..TokenBudgetConfig::paper_default()
        };
        let report = compute_budget(&cfg).unwrap();
        assert_eq!(report.t_hier, 0);
        assert_eq!(report.ratio, None);
        assert_eq!(report.ratio_display(), "n/a");
    }

    #[test]
    fn config_validation_errors() {
        let mut cfg = TokenBudgetConfig::paper_default();
        cfg.n_hiera = 65;
        assert!(matches!(cfg.validate(), Err(BudgetError::InvalidConfig(_))));
        let mut cfg = TokenBudgetConfig::paper_default();
        cfg.s_stage = 9;
        assert!(matches!(cfg.validate(), Err(BudgetError::InvalidStage { .. })));
        let mut cfg = TokenBudgetConfig::paper_default();
        cfg.s_pool = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn enumerate_includes_default_config_at_exact_budget() {
        let found = enumerate_configs(
            22_144,
            &EncoderGeometry::paper_flat(),
            &EncoderGeometry::paper_hier(),
            64,
        )
        .unwrap();
        let target = TokenBudgetConfig::paper_default();
        assert!(found.iter().any(|(cfg, report)| {
            cfg.n_hiera == target.n_hiera
                && cfg.s_stage == target.s_stage
                && cfg.s_pool == target.s_pool
                && report.total() == 22_144
        }));
    }

    #[test]
    fn enumerate_empty_when_flat_stream_exhausts_budget() {
        // The flat stream alone costs 13,440 tokens; any n_hiera >= 1 overflows.
        let found = enumerate_configs(
            13_440,
            &EncoderGeometry::paper_flat(),
            &EncoderGeometry::paper_hier(),
            64,
        )
        .unwrap();
        assert!(found.is_empty());
    }

    #[test]
    fn enumerate_huge_budget_is_full_cross_product() {
        let geom_hier = EncoderGeometry::paper_hier();
        let found = enumerate_configs(
            1_000_000_000,
            &EncoderGeometry::paper_flat(),
            &geom_hier,
            64,
        )
        .unwrap();
        // combinatorial count oracle: sum over stages of n_total * grid(stage)
        let expected: usize = (1..=geom_hier.num_stages())
            .map(|s| 64 * grid_side(&geom_hier, s).unwrap())
            .sum();
        assert_eq!(found.len(), expected);
    }

    #[test]
    fn enumerate_rejects_budget_below_flat_per_frame() {
        let err = enumerate_configs(
            10,
            &EncoderGeometry::paper_flat(),
            &EncoderGeometry::paper_hier(),
            64,
        )
        .unwrap_err();
        assert!(matches!(err, BudgetError::BudgetTooSmall { .. }));
    }

    #[test]
    fn enumerate_ordering_is_descending_t_hier() {
        let found = enumerate_configs(
            30_000,
            &EncoderGeometry::paper_flat(),
            &EncoderGeometry::paper_hier(),
            64,
        )
        .unwrap();
        assert!(!found.is_empty());
        for pair in found.windows(2) {
            let (a, b) = (&pair[0].1, &pair[1].1);
            assert!(
                a.t_hier > b.t_hier || (a.t_hier == b.t_hier && a.total() <= b.total()),
                "ordering violated"
            );
        }
    }

    #[test]
    fn geometry_rejects_degenerate_grids() {
        assert!(EncoderGeometry::new(8, 4, vec![1, 2, 2], vec![1, 2, 4]).is_err());
        assert!(EncoderGeometry::new(8, 16, vec![1], vec![1]).is_err());
        assert!(EncoderGeometry::new(8, 4, vec![], vec![]).is_err());
        assert!(EncoderGeometry::new(8, 4, vec![0], vec![1]).is_err());
    }

    #[test]
    fn row_token_share_equals_pooled_height() {
        for pooled in 1..=30 {
            let per_frame = tokens_per_frame(pooled, pooled);
            assert_eq!(per_frame - pooled * pooled, pooled);
        }
    }

    #[test]
    fn stage_increase_halves_grid_when_stride_two() {
        let geom = EncoderGeometry::paper_hier();
        for stage in 1..geom.num_stages() {
            if geom.stage_strides[stage] == 2 {
                let here = grid_side(&geom, stage).unwrap();
                let next = grid_side(&geom, stage + 1).unwrap();
                assert_eq!(next, here / 2);
            }
        }
    }
}

//! Property tests for the cross-cutting invariants: token arithmetic
//! identities, sampler behavior, kernel numerics, and serialization.

use dualtok::budget::{
    compute_budget, grid_side, pooled_side, tokens_per_frame, EncoderGeometry, TokenBudgetConfig,
};
use dualtok::evalkit::{score_mra, Answer, PredictionRecord, TaskName};
use dualtok::numerics::{
    bilinear_resize, read_tensor, softmax_rows, uniform_init, write_tensor, Graph, Tensor,
    LAYERNORM_EPS,
};
use dualtok::sampler::{sample_uniform, subsample};
use proptest::prelude::*;

fn arb_hier_geometry() -> impl Strategy<Value = EncoderGeometry> {
    (
        2usize..=4,                                  // stem stride
        proptest::collection::vec(1usize..=2, 1..=4), // stage strides
        1usize..=3,                                  // final grid
        0usize..=3,                                  // input remainder
    )
        .prop_map(|(stem, strides, last_grid, rem)| {
            let grid0: usize = last_grid * strides.iter().product::<usize>();
            let channels: Vec<usize> = (0..strides.len()).map(|i| 4 + 4 * i).collect();
            EncoderGeometry::new(stem * grid0 + rem.min(stem - 1), stem, strides, channels)
                .expect("constructed geometry is valid")
        })
}

fn arb_budget_config() -> impl Strategy<Value = TokenBudgetConfig> {
    (arb_hier_geometry(), 1usize..=64, 1usize..=6).prop_flat_map(|(geom_hier, n_total, s_pool)| {
        let stages = geom_hier.num_stages();
        (Just(geom_hier), Just(n_total), Just(s_pool), 0usize..=n_total, 1usize..=stages).prop_map(
            |(geom_hier, n_total, s_pool, n_hiera, s_stage)| TokenBudgetConfig {
                n_total,
                n_hiera,
                s_stage,
                s_pool,
                geom_flat: EncoderGeometry::paper_flat(),
                geom_hier,
            },
        )
    })
}

proptest! {
    #[test]
    fn budget_totals_are_per_frame_sums(cfg in arb_budget_config()) {
        let report = compute_budget(&cfg).unwrap();
        // exact integer identity: totals equal the sum of per-frame counts
        let flat_sum: u64 = (0..cfg.n_total).map(|_| report.per_frame_flat as u64).sum();
        let hier_sum: u64 = (0..cfg.n_hiera).map(|_| report.per_frame_hier as u64).sum();
        prop_assert_eq!(report.t_flat, flat_sum);
        prop_assert_eq!(report.t_hier, hier_sum);
        // row-token share: per_frame - pooled^2 = pooled
        prop_assert_eq!(
            report.per_frame_hier - report.pooled_hier * report.pooled_hier,
            report.pooled_hier
        );
        prop_assert_eq!(
            report.per_frame_flat - report.pooled_flat * report.pooled_flat,
            report.pooled_flat
        );
    }

    #[test]
    fn budget_is_monotone_in_pool_stride(cfg in arb_budget_config()) {
        let report = compute_budget(&cfg).unwrap();
        let coarser = TokenBudgetConfig { s_pool: cfg.s_pool + 1, ..cfg.clone() };
        let coarser_report = compute_budget(&coarser).unwrap();
        prop_assert!(coarser_report.t_hier <= report.t_hier);
    }

    #[test]
    fn stage_step_divides_grid_by_its_stride(cfg in arb_budget_config()) {
        let geom = &cfg.geom_hier;
        for stage in 1..geom.num_stages() {
            let here = grid_side(geom, stage).unwrap();
            let next = grid_side(geom, stage + 1).unwrap();
            prop_assert_eq!(next, here / geom.stage_strides[stage]);
        }
    }

    #[test]
    fn pooled_side_is_exact_ceiling(grid in 1usize..=512, s_pool in 1usize..=64) {
        let expected = grid / s_pool + usize::from(grid % s_pool != 0);
        prop_assert_eq!(pooled_side(grid, s_pool), expected);
        prop_assert!(pooled_side(grid, s_pool) >= 1);
        prop_assert_eq!(
            tokens_per_frame(expected, expected),
            expected * (expected + 1)
        );
    }

    #[test]
    fn sampler_outputs_increase_and_stay_in_range(
        source in 1usize..=2000,
        fraction in 0.01f64..=1.0,
    ) {
        let n = ((source as f64 * fraction) as usize).max(1);
        let indices = sample_uniform(source, n).unwrap();
        prop_assert_eq!(indices.len(), n);
        prop_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(indices.iter().all(|&i| i < source));
        // purity
        prop_assert_eq!(&indices, &sample_uniform(source, n).unwrap());
    }

    #[test]
    fn sampler_composition_matches_direct_for_odd_ratios(
        base in 1usize..=20,
        ratio_half in 0usize..=4,
        multiplier in 1usize..=5,
    ) {
        // n_hiera = base, n_total = base * odd, F = n_total * multiplier
        let odd = 2 * ratio_half + 1;
        let n_hiera = base;
        let n_total = base * odd;
        let source = n_total * multiplier;
        let composed = subsample(&sample_uniform(source, n_total).unwrap(), n_hiera).unwrap();
        let direct = sample_uniform(source, n_hiera).unwrap();
        prop_assert_eq!(composed, direct);
    }

    #[test]
    fn resize_stays_within_source_bounds(
        h in 1usize..=12,
        w in 1usize..=12,
        oh in 1usize..=16,
        ow in 1usize..=16,
        seed in 0u64..1000,
    ) {
        let src = uniform_init(&[h, w, 2], 10.0, seed);
        let out = bilinear_resize(&src, oh, ow);
        for ch in 0..2 {
            let channel = |t: &Tensor| -> Vec<f64> {
                t.data().iter().skip(ch).step_by(2).copied().collect()
            };
            let src_ch = channel(&src);
            let out_ch = channel(&out);
            let lo = src_ch.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = src_ch.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            // 1e-12 of float headroom on the convex-combination bound
            prop_assert!(out_ch.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
        }
    }

    #[test]
    fn softmax_rows_are_distributions(rows in 1usize..=6, cols in 1usize..=8, seed in 0u64..500) {
        let x = uniform_init(&[rows, cols], 30.0, seed);
        let s = softmax_rows(&x);
        for r in 0..rows {
            let row = &s.data()[r * cols..(r + 1) * cols];
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn layernorm_pre_affine_stats(rows in 1usize..=5, cols in 2usize..=16, seed in 0u64..500) {
        let x = uniform_init(&[rows, cols], 3.0, seed);
        let mut graph = Graph::new();
        let input = graph.constant(x);
        let gamma = graph.constant(Tensor::full(&[cols], 1.0));
        let beta = graph.constant(Tensor::zeros(&[cols]));
        let normed = graph.layernorm(input, gamma, beta);
        let value = graph.value(normed);
        for r in 0..rows {
            let row = &value.data()[r * cols..(r + 1) * cols];
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
            prop_assert!(mean.abs() < 1e-10, "mean {}", mean);
            prop_assert!((var - 1.0).abs() < 1e-8, "var {} (eps {})", var, LAYERNORM_EPS);
        }
    }

    #[test]
    fn tensor_serialization_roundtrips(
        shape in proptest::collection::vec(1usize..=5, 1..=4),
        seed in 0u64..1000,
    ) {
        let tensor = uniform_init(&shape, 1e6, seed);
        let mut buffer = Vec::new();
        write_tensor(&mut buffer, &tensor).unwrap();
        let back = read_tensor(&mut buffer.as_slice()).unwrap();
        prop_assert_eq!(back.shape(), tensor.shape());
        for (a, b) in tensor.data().iter().zip(back.data().iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn mra_scale_invariant_under_binary_scaling(
        pairs in proptest::collection::vec((0.1f64..100.0, 0.1f64..100.0), 1..8),
        exponent in -20i32..=20,
    ) {
        let thresholds = dualtok::evalkit::default_mra_thresholds();
        let records: Vec<PredictionRecord> = pairs
            .iter()
            .enumerate()
            .map(|(i, (p, g))| PredictionRecord {
                task: TaskName::RoomSize,
                question_id: format!("q{i}"),
                answer: Answer::Numeric { predicted: *p, gold: *g },
            })
            .collect();
        let base = score_mra(&records, &thresholds).unwrap();
        let c = (2.0f64).powi(exponent);
        let scaled: Vec<PredictionRecord> = records
            .iter()
            .map(|r| match &r.answer {
                Answer::Numeric { predicted, gold } => PredictionRecord {
                    task: r.task,
                    question_id: r.question_id.clone(),
                    answer: Answer::Numeric { predicted: predicted * c, gold: gold * c },
                },
                _ => unreachable!(),
            })
            .collect();
        prop_assert_eq!(score_mra(&scaled, &thresholds).unwrap(), base);
    }
}

//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with:
//!   cargo test -p dualtok-cli --test acceptance -- --nocapture --test-threads=1

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use dualtok::budget::{compute_budget, grid_side, EncoderGeometry, TokenBudgetConfig};
use dualtok::evalkit::{
    aggregate_scores, build_judge_prompt, emit_report, judge_all, parse_judge_scores,
    report_from_task_scores, score_mcq, score_mra, Answer, JudgeClient, JudgeRequest,
    PredictionRecord, TaskName,
};
use dualtok::fusion::{text, verify_stream, DecoderConfig, Model, PipelineConfig, StreamSource};
use dualtok::numerics::{
    bilinear_resize, grad_check, half_pixel_source, seeded_rng, uniform_init, Graph, NodeId,
    ParamStore, Tensor,
};
use dualtok::training::{
    run_stage, stage_spec, synthetic_task, RunOptions, StageName, TaskConfig, TaskKind,
};
use rand::Rng;

fn report(criterion: usize, label: &str, result: Result<(), String>) {
    match result {
        Ok(()) => println!("acceptance criterion {criterion:2} ({label}): PASS"),
        Err(reason) => {
            println!("acceptance criterion {criterion:2} ({label}): FAIL - {reason}");
            panic!("criterion {criterion} failed: {reason}");
        }
    }
}

fn ensure(condition: bool, message: impl Into<String>) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message.into())
    }
}

// --- criterion 1: token arithmetic -----------------------------------------

#[test]
fn criterion_01_token_arithmetic() {
    let started = Instant::now();
    let result = (|| {
        let report = compute_budget(&TokenBudgetConfig::paper_default())
            .map_err(|e| e.to_string())?;
        ensure(report.t_flat == 13_440, format!("t_flat {}", report.t_flat))?;
        ensure(report.t_hier == 8_704, format!("t_hier {}", report.t_hier))?;
        ensure(
            report.ratio_display() == "1.54",
            format!("ratio {}", report.ratio_display()),
        )?;
        ensure(
            started.elapsed().as_secs_f64() < 1.0,
            format!("took {:?}", started.elapsed()),
        )
    })();
    report(1, "token arithmetic 13440/8704/1.54", result);
}

// --- criterion 2: pipeline/plan agreement ----------------------------------

fn random_toy_config(rng: &mut impl Rng) -> PipelineConfig {
    // flat geometry: small grid, sometimes a non-divisible remainder
    let patch = rng.gen_range(2..=4usize);
    let flat_grid = rng.gen_range(2..=7usize);
    let flat_rem = rng.gen_range(0..patch);
    let geom_flat =
        EncoderGeometry::new(patch * flat_grid + flat_rem, patch, vec![1], vec![8]).unwrap();

    // hier geometry built backwards from a final grid so every stage is >= 1
    let stem = rng.gen_range(2..=4usize);
    let stages = rng.gen_range(1..=4usize);
    let strides: Vec<usize> = (0..stages).map(|_| rng.gen_range(1..=2usize)).collect();
    let last_grid = rng.gen_range(1..=3usize);
    let grid0: usize = last_grid * strides.iter().product::<usize>();
    let hier_rem = rng.gen_range(0..stem);
    let channels: Vec<usize> = (0..stages).map(|i| 4 + 2 * i).collect();
    let geom_hier =
        EncoderGeometry::new(stem * grid0 + hier_rem, stem, strides, channels).unwrap();

    let n_total = rng.gen_range(1..=3usize);
    let n_hiera = rng.gen_range(0..=n_total);
    let s_stage = rng.gen_range(1..=stages);
    let tap_grid = grid_side(&geom_hier, s_stage).unwrap();
    let s_pool = rng.gen_range(1..=tap_grid + 1);

    let budget = TokenBudgetConfig {
        n_total,
        n_hiera,
        s_stage,
        s_pool,
        geom_flat,
        geom_hier,
    };
    PipelineConfig {
        budget,
        in_channels: 2,
        flat_embed_dim: 8,
        flat_depth: 1,
        flat_heads: 2,
        d_model: 8,
        projector_hidden: 8,
        decoder: DecoderConfig {
            vocab_size: text::VOCAB_SIZE,
            d_model: 8,
            layers: 1,
            heads: 2,
            max_seq: 2048,
        },
    }
}

#[test]
fn criterion_02_pipeline_matches_planner() {
    let started = Instant::now();
    let result = (|| {
        let mut rng = seeded_rng(2024);
        for case in 0..200 {
            let config = random_toy_config(&mut rng);
            let cfg_debug = format!(
                "case {case}: n_total {} n_hiera {} s_stage {} s_pool {}",
                config.budget.n_total,
                config.budget.n_hiera,
                config.budget.s_stage,
                config.budget.s_pool
            );
            let model = Model::new(config).map_err(|e| format!("{cfg_debug}: {e}"))?;
            let store = model.init_params(case).map_err(|e| format!("{cfg_debug}: {e}"))?;
            let frames = model.config.budget.n_total + (case % 3) as usize;
            let video = uniform_init(&[frames, 16, 16, 2], 0.5, 9000 + case);
            let out = model
                .forward(&store, &video)
                .map_err(|e| format!("{cfg_debug}: {e}"))?;
            let predicted = out.report.clone();
            ensure(
                out.stream.len() as u64 == predicted.total(),
                format!(
                    "{cfg_debug}: stream {} vs predicted {}",
                    out.stream.len(),
                    predicted.total()
                ),
            )?;
            ensure(
                out.stream.count_source(StreamSource::Flat) as u64 == predicted.t_flat
                    && out.stream.count_source(StreamSource::Hier) as u64 == predicted.t_hier,
                format!("{cfg_debug}: per-encoder counts diverge"),
            )?;
            verify_stream(&out.stream, &predicted).map_err(|e| format!("{cfg_debug}: {e}"))?;
        }
        ensure(
            started.elapsed().as_secs_f64() < 60.0,
            format!("took {:?}", started.elapsed()),
        )
    })();
    report(2, "200 random configs agree with planner", result);
}

// --- criterion 3: bilinear oracle ------------------------------------------

/// Independent naive oracle: explicit four-corner weighted sum.
fn naive_bilinear(src: &Tensor, out_h: usize, out_w: usize) -> Tensor {
    let (h, w, c) = (src.shape()[0], src.shape()[1], src.shape()[2]);
    let mut out = vec![0.0; out_h * out_w * c];
    for oy in 0..out_h {
        for ox in 0..out_w {
            let sy = ((oy as f64 + 0.5) * h as f64 / out_h as f64 - 0.5)
                .clamp(0.0, (h - 1) as f64);
            let sx = ((ox as f64 + 0.5) * w as f64 / out_w as f64 - 0.5)
                .clamp(0.0, (w - 1) as f64);
            let (y0, x0) = (sy.floor() as usize, sx.floor() as usize);
            let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
            let (fy, fx) = (sy - y0 as f64, sx - x0 as f64);
            for ch in 0..c {
                let v = |yy: usize, xx: usize| src.data()[(yy * w + xx) * c + ch];
                out[(oy * out_w + ox) * c + ch] = v(y0, x0) * (1.0 - fy) * (1.0 - fx)
                    + v(y0, x1) * (1.0 - fy) * fx
                    + v(y1, x0) * fy * (1.0 - fx)
                    + v(y1, x1) * fy * fx;
            }
        }
    }
    Tensor::new(vec![out_h, out_w, c], out)
}

#[test]
fn criterion_03_bilinear_oracle() {
    let result = (|| {
        let mut rng = seeded_rng(33);
        for case in 0..100 {
            let h = rng.gen_range(1..=24usize);
            let w = rng.gen_range(1..=24usize);
            let c = rng.gen_range(1..=3usize);
            let oh = rng.gen_range(1..=24usize);
            let ow = rng.gen_range(1..=24usize);
            let src = uniform_init(&[h, w, c], 10.0, 100 + case);
            let got = bilinear_resize(&src, oh, ow);
            let expected = naive_bilinear(&src, oh, ow);
            for (a, b) in got.data().iter().zip(expected.data().iter()) {
                ensure(
                    (a - b).abs() < 1e-12,
                    format!("case {case} ({h}x{w}->{oh}x{ow}): {a} vs {b}"),
                )?;
            }
            // stride-1 (same size) must be a bitwise identity
            let same = bilinear_resize(&src, h, w);
            ensure(
                same.data()
                    .iter()
                    .zip(src.data().iter())
                    .all(|(a, b)| a.to_bits() == b.to_bits()),
                format!("case {case}: same-size resize not bitwise identity"),
            )?;
            // constant fields are preserved exactly
            let constant = Tensor::full(&[h, w, c], 3.25);
            let resized = bilinear_resize(&constant, oh, ow);
            ensure(
                resized.data().iter().all(|&v| v == 3.25),
                format!("case {case}: constant field not exact"),
            )?;
        }
        Ok(())
    })();
    report(3, "bilinear matches naive oracle at 1e-12", result);
}

// --- criterion 4: gradient checks ------------------------------------------

fn gradcheck_config() -> PipelineConfig {
    let geom_flat = EncoderGeometry::new(24, 4, vec![1], vec![8]).unwrap();
    let geom_hier = EncoderGeometry::new(32, 4, vec![1, 2, 2, 2], vec![4, 6, 8, 10]).unwrap();
    PipelineConfig {
        budget: TokenBudgetConfig {
            n_total: 2,
            n_hiera: 1,
            s_stage: 4,
            s_pool: 2,
            geom_flat,
            geom_hier,
        },
        in_channels: 2,
        flat_embed_dim: 8,
        flat_depth: 1,
        flat_heads: 2,
        d_model: 8,
        projector_hidden: 8,
        decoder: DecoderConfig {
            vocab_size: text::VOCAB_SIZE,
            d_model: 8,
            layers: 1,
            heads: 2,
            max_seq: 512,
        },
    }
}

#[test]
fn criterion_04_gradient_checks() {
    let result = (|| {
        for seed in [1u64, 2, 3] {
            let model = Model::new(gradcheck_config()).map_err(|e| e.to_string())?;
            let store = model.init_params(seed).map_err(|e| e.to_string())?;
            let video = uniform_init(&[3, 16, 16, 2], 0.5, 500 + seed);
            let ids = text::encode_with_specials("ok");
            let model_ref = &model;
            let video_ref = &video;
            let ids_ref = &ids;
            let loss_fn = move |graph: &mut Graph, store: &ParamStore| -> NodeId {
                model_ref
                    .decode_loss(graph, store, video_ref, ids_ref)
                    .expect("loss builds")
            };
            for leaf in [
                "hier_projector.fc1.weight",
                "hier_projector.fc1.bias",
                "hier_projector.fc2.weight",
                "hier_projector.fc2.bias",
            ] {
                let rel = grad_check(&loss_fn, &store, leaf, 1e-5).map_err(|e| e.to_string())?;
                ensure(
                    rel < 1e-4,
                    format!("seed {seed} leaf {leaf}: max relative error {rel}"),
                )?;
            }
        }
        Ok(())
    })();
    report(4, "hier-projector gradients vs finite differences", result);
}

// --- criterion 5: stage-mask contract --------------------------------------

fn leaf_hashes(store: &ParamStore) -> BTreeMap<String, [u8; 32]> {
    store
        .paths()
        .into_iter()
        .map(|p| {
            let h = store.leaf_hash(&p).unwrap();
            (p, h)
        })
        .collect()
}

#[test]
fn criterion_05_stage_mask_contract() {
    let result = (|| {
        let model = Model::new(PipelineConfig::toy()).map_err(|e| e.to_string())?;
        let mut store = model.init_params(55).map_err(|e| e.to_string())?;
        let task_cfg = TaskConfig {
            items: 4,
            frames: 4,
            frame_size: 24,
            channels: 3,
        };

        // stage 1: 100 steps; every non-projector leaf must be bitwise stable
        let spec = stage_spec(StageName::Stage1);
        let task = synthetic_task(spec.dataset, 56, &task_cfg);
        let before = leaf_hashes(&store);
        run_stage(
            &spec,
            &model,
            &mut store,
            &task,
            &RunOptions {
                steps: 100,
                batch_size: 2,
                seed: 57,
            },
        )
        .map_err(|e| e.to_string())?;
        let after = leaf_hashes(&store);
        for (path, hash) in &after {
            if !path.starts_with("hier_projector") {
                ensure(
                    before[path] == *hash,
                    format!("stage-1 modified frozen leaf {path}"),
                )?;
            }
        }

        // stage 3: the hier-encoder subtree hash must be unchanged
        let spec = stage_spec(StageName::Stage3);
        let task = synthetic_task(spec.dataset, 58, &task_cfg);
        let hier_before = store.subtree_hash("hier_encoder");
        run_stage(
            &spec,
            &model,
            &mut store,
            &task,
            &RunOptions {
                steps: 25,
                batch_size: 2,
                seed: 59,
            },
        )
        .map_err(|e| e.to_string())?;
        ensure(
            store.subtree_hash("hier_encoder") == hier_before,
            "stage-3 modified the hier encoder".to_string(),
        )?;
        // and stage 3 must have actually trained something
        ensure(
            leaf_hashes(&store) != after,
            "stage-3 changed no parameters at all".to_string(),
        )
    })();
    report(5, "stage masks freeze exactly the contracted leaves", result);
}

// --- criterion 6: trainability ---------------------------------------------

#[test]
fn criterion_06_trainability() {
    let result = (|| {
        let model = Model::new(PipelineConfig::toy()).map_err(|e| e.to_string())?;
        let mut store = model.init_params(66).map_err(|e| e.to_string())?;
        let task = synthetic_task(
            TaskKind::Alignment,
            67,
            &TaskConfig {
                items: 8,
                frames: 4,
                frame_size: 24,
                channels: 3,
            },
        );

        // stage-1: sharp decline within 500 steps (full-batch updates)
        let options = RunOptions {
            steps: 500,
            batch_size: 8,
            seed: 68,
        };
        let spec1 = stage_spec(StageName::Stage1);
        let log1 = run_stage(&spec1, &model, &mut store, &task, &options)
            .map_err(|e| e.to_string())?;
        let (initial, fitted) = (log1.initial_window_mean(), log1.final_window_mean());
        ensure(
            fitted < 0.5 * initial,
            format!("stage-1 window means: initial {initial} final {fitted}"),
        )?;

        // stage-2 analog on the already-fitted task: only a mild reduction
        let options = RunOptions {
            steps: 500,
            batch_size: 8,
            seed: 69,
        };
        let spec2 = stage_spec(StageName::Stage2);
        let log2 = run_stage(&spec2, &model, &mut store, &task, &options)
            .map_err(|e| e.to_string())?;
        let (start2, end2) = (log2.initial_window_mean(), log2.final_window_mean());
        let reduction = (start2 - end2) / start2;
        ensure(
            reduction < 0.10,
            format!("stage-2 rerun reduced loss by {:.1}% ({start2} -> {end2})", reduction * 100.0),
        )
    })();
    report(6, "stage-1 halves loss; fitted rerun barely moves", result);
}

// --- criterion 7: causality probe -------------------------------------------

#[test]
fn criterion_07_causality_probe() {
    let result = (|| {
        let model = Model::new(gradcheck_config()).map_err(|e| e.to_string())?;
        let store = model.init_params(77).map_err(|e| e.to_string())?;
        let visual = uniform_init(&[10, 8], 0.5, 78);
        let base_text = text::encode_with_specials("abcdef");
        let total = visual.shape()[0] + base_text.len();

        let logits_for = |vis: &Tensor, ids: &[usize]| -> Result<Tensor, String> {
            let mut graph = Graph::new();
            let v = graph.constant(vis.clone());
            let node = model
                .decoder
                .forward_logits(&mut graph, &store, Some(v), ids)
                .map_err(|e| e.to_string())?;
            Ok(graph.value(node).clone())
        };
        let base = logits_for(&visual, &base_text)?;

        let mut rng = seeded_rng(79);
        for probe in 0..50 {
            let t = rng.gen_range(0..total - 1);
            let q = rng.gen_range(t + 1..total);
            let (mut vis, mut ids) = (visual.clone(), base_text.clone());
            if q < vis.shape()[0] {
                let dim = rng.gen_range(0..vis.shape()[1]);
                vis.data_mut()[q * 8 + dim] += rng.gen_range(0.5..5.0);
            } else {
                let new_id = (ids[q - visual.shape()[0]] + 1 + rng.gen_range(0..100)) % 256;
                ids[q - visual.shape()[0]] = new_id;
            }
            let perturbed = logits_for(&vis, &ids)?;
            for position in 0..=t {
                for v in 0..base.cols() {
                    ensure(
                        base.at2(position, v).to_bits() == perturbed.at2(position, v).to_bits(),
                        format!(
                            "probe {probe}: perturbing position {q} changed logit at ({position}, {v}) <= t = {t}"
                        ),
                    )?;
                }
            }
        }
        Ok(())
    })();
    report(7, "suffix perturbations never touch prefix logits", result);
}

// --- criterion 8: scorer oracles --------------------------------------------

#[test]
fn criterion_08_scorer_oracles() {
    let result = (|| {
        let thresholds = dualtok::evalkit::default_mra_thresholds();
        let nine_of_ten = PredictionRecord {
            task: TaskName::ObjCount,
            question_id: "q".into(),
            answer: Answer::Numeric {
                predicted: 9.0,
                gold: 10.0,
            },
        };
        let mra = score_mra(&[nine_of_ten], &thresholds).map_err(|e| e.to_string())?;
        ensure(mra == 80.0, format!("mra fixture gave {mra}"))?;

        let choices: Vec<PredictionRecord> = [("A", "A"), ("b", "B"), ("C", "D"), ("D", "D")]
            .iter()
            .enumerate()
            .map(|(i, (p, g))| PredictionRecord {
                task: TaskName::RelDist,
                question_id: format!("q{i}"),
                answer: Answer::MultipleChoice {
                    predicted: p.to_string(),
                    gold: g.to_string(),
                },
            })
            .collect();
        let mcq = score_mcq(&choices).map_err(|e| e.to_string())?;
        ensure(mcq == 75.0, format!("mcq fixture gave {mcq}"))?;

        // the benchmark table's strongest row, re-averaged from task scores
        let row = report_from_task_scores(&[
            (TaskName::ObjCount, 65.7),
            (TaskName::AbsDist, 51.0),
            (TaskName::ObjSize, 75.5),
            (TaskName::RoomSize, 71.4),
            (TaskName::RelDist, 51.6),
            (TaskName::RelDir, 34.6),
            (TaskName::RoutePlan, 38.1),
            (TaskName::ApprOrder, 66.5),
        ]);
        ensure(
            (row.average - 56.8).abs() < 0.05,
            format!("row average {}", row.average),
        )?;

        // emit_report end to end on a hand-built record set
        let records = vec![
            PredictionRecord {
                task: TaskName::ObjCount,
                question_id: "n1".into(),
                answer: Answer::Numeric {
                    predicted: 9.0,
                    gold: 10.0,
                },
            },
            PredictionRecord {
                task: TaskName::RelDist,
                question_id: "m1".into(),
                answer: Answer::MultipleChoice {
                    predicted: "a".into(),
                    gold: "A".into(),
                },
            },
        ];
        let rep = emit_report(&records).map_err(|e| e.to_string())?;
        ensure(
            rep.score_for(TaskName::ObjCount) == Some(80.0)
                && rep.score_for(TaskName::RelDist) == Some(100.0)
                && (rep.average - 90.0).abs() < 1e-12,
            format!("emit_report gave average {}", rep.average),
        )
    })();
    report(8, "MRA/MCQ fixtures and table-average", result);
}

// --- criterion 9: judge workflow ---------------------------------------------

#[test]
fn criterion_09_judge_workflow() {
    let result = (|| {
        // golden-file template
        let descriptions = [
            ('A', "stub description for model A"),
            ('B', "stub description for model B"),
            ('C', "stub description for model C"),
            ('D', "stub description for model D"),
        ];
        let prompt = build_judge_prompt(&descriptions).map_err(|e| e.to_string())?;
        let golden = include_str!("fixtures/judge_prompt_golden.txt");
        ensure(prompt == golden, "prompt differs from golden file".to_string())?;
        ensure(
            prompt.contains("The scoring scale is from 0 (minimum) to 10 (maximum)."),
            "scale sentence missing".to_string(),
        )?;
        ensure(prompt.contains("```json"), "fenced block missing".to_string())?;

        // parser round-trip on an echo fixture
        let response = "evaluation prose\n```json\n{\"A\": 4, \"B\": 9, \"C\": 0, \"D\": 10}\n```\n";
        let scores = parse_judge_scores(response).map_err(|e| e.to_string())?;
        ensure(
            (scores.a, scores.b, scores.c, scores.d) == (4, 9, 0, 10),
            "round-trip mismatch".to_string(),
        )?;

        // offline aggregation over 288 fixtures vs an integer-mean oracle
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut rng = seeded_rng(99);
        let mut sums = [0u64; 4];
        let mut requests = Vec::new();
        for i in 0..288 {
            let drawn: Vec<u8> = (0..4).map(|_| rng.gen_range(0..=10u8)).collect();
            for (slot, &v) in sums.iter_mut().zip(drawn.iter()) {
                *slot += v as u64;
            }
            let id = format!("video-{i:03}");
            std::fs::write(
                dir.path().join(format!("{id}.txt")),
                format!(
                    "analysis...\n```json\n{{\"A\": {}, \"B\": {}, \"C\": {}, \"D\": {}}}\n```\n",
                    drawn[0], drawn[1], drawn[2], drawn[3]
                ),
            )
            .map_err(|e| e.to_string())?;
            requests.push(JudgeRequest {
                question_id: id,
                prompt: prompt.clone(),
            });
        }
        let client = JudgeClient::offline(dir.path().to_path_buf());
        let scored = judge_all(&client, requests, 4).map_err(|e| e.to_string())?;
        ensure(scored.len() == 288, format!("scored {}", scored.len()))?;
        let aggregate =
            aggregate_scores(&scored.iter().map(|(_, s)| *s).collect::<Vec<_>>())
                .map_err(|e| e.to_string())?;
        for (key, sum) in ['A', 'B', 'C', 'D'].iter().zip(sums.iter()) {
            let oracle = *sum as f64 / 288.0;
            ensure(
                (aggregate.mean(*key) - oracle).abs() < 1e-9,
                format!("model {key}: {} vs oracle {oracle}", aggregate.mean(*key)),
            )?;
        }
        Ok(())
    })();
    report(9, "judge template, parsing, 288-fixture aggregation", result);
}

// --- criterion 10: CLI determinism -------------------------------------------

#[test]
fn criterion_10_cli_determinism() {
    let result = (|| {
        let bin = env!("CARGO_BIN_EXE_dualtok");
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;

        let run_train = |out: &str| -> Result<(), String> {
            let status = Command::new(bin)
                .current_dir(dir.path())
                .args([
                    "train", "--stage", "stage-1", "--steps", "5", "--seed", "7", "--items", "2",
                    "--batch", "2", "--out", out,
                ])
                .output()
                .map_err(|e| e.to_string())?;
            ensure(
                status.status.success(),
                format!("train failed: {}", String::from_utf8_lossy(&status.stderr)),
            )
        };
        run_train("a")?;
        run_train("b")?;
        for artifact in ["loss.csv", "checkpoint.bin", "manifest.json"] {
            let left = std::fs::read(dir.path().join("a").join(artifact)).map_err(|e| e.to_string())?;
            let right = std::fs::read(dir.path().join("b").join(artifact)).map_err(|e| e.to_string())?;
            ensure(left == right, format!("train artifact {artifact} differs between runs"))?;
        }

        let run_plan = |out: &str| -> Result<(), String> {
            let status = Command::new(bin)
                .current_dir(dir.path())
                .args(["plan", "--budget", "22600", "--sweep", "--out", out])
                .output()
                .map_err(|e| e.to_string())?;
            ensure(
                status.status.success(),
                format!("plan failed: {}", String::from_utf8_lossy(&status.stderr)),
            )
        };
        run_plan("c")?;
        run_plan("d")?;
        for artifact in ["sweep.csv", "manifest.json"] {
            let left = std::fs::read(dir.path().join("c").join(artifact)).map_err(|e| e.to_string())?;
            let right = std::fs::read(dir.path().join("d").join(artifact)).map_err(|e| e.to_string())?;
            ensure(left == right, format!("plan artifact {artifact} differs between runs"))?;
        }
        Ok(())
    })();
    report(10, "identical command + seed gives identical artifacts", result);
}

// --- supporting check: the half-pixel convention itself ----------------------

#[test]
fn half_pixel_convention_is_what_the_oracle_assumes() {
    // anchor the shared convention used by both implementation and oracle
    let (lo, hi, frac) = half_pixel_source(0, 4, 4);
    assert_eq!((lo, hi, frac), (0, 1, 0.0));
    let (lo, hi, frac) = half_pixel_source(1, 4, 2);
    assert_eq!((lo, hi), (2, 3));
    assert!((frac - 0.5).abs() < 1e-15);
}

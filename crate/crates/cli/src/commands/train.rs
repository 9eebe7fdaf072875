//! `train`: one schedule stage on its synthetic task, emitting the loss CSV,
//! a parameter checkpoint, and the run manifest.

use std::path::PathBuf;

use clap::Args;
use dualtok::config::ConfigDoc;
use dualtok::fusion::{Model, PipelineConfig};
use dualtok::numerics::save_store;
use dualtok::training::{run_stage, stage_spec, synthetic_task, RunOptions, StageName, TaskConfig};

use crate::manifest::{Manifest, OutputDir};
use crate::{CliError, DEFAULT_SEED};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Stage to run: stage-1, stage-2, stage-3, or thinking.
    #[arg(long)]
    pub stage: String,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Items in the synthetic dataset.
    #[arg(long, default_value_t = 8)]
    pub items: usize,
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    /// Config document overriding the toy pipeline configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn execute(args: &TrainArgs) -> Result<(), CliError> {
    let stage = StageName::parse(&args.stage)
        .ok_or_else(|| CliError::Usage(format!("unknown stage {:?}", args.stage)))?;
    if args.steps == 0 {
        return Err(CliError::Usage("--steps must be >= 1".into()));
    }
    let config_bytes = args
        .config
        .as_ref()
        .map(std::fs::read)
        .transpose()
        .map_err(|e| CliError::Usage(format!("cannot read config: {e}")))?;
    let doc = match &config_bytes {
        Some(b) => ConfigDoc::parse(
            std::str::from_utf8(b).map_err(|_| CliError::Usage("config is not UTF-8".into()))?,
        )
        .map_err(|e| CliError::Usage(e.to_string()))?,
        None => ConfigDoc::default(),
    };
    let config = doc.apply_pipeline(&PipelineConfig::toy());

    let spec = stage_spec(stage);
    let model = Model::new(config).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut store = model
        .init_params(args.seed)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let task = synthetic_task(
        spec.dataset,
        args.seed,
        &TaskConfig {
            items: args.items,
            ..TaskConfig::default()
        },
    );
    let options = RunOptions {
        steps: args.steps,
        batch_size: args.batch,
        seed: args.seed,
    };
    let log = run_stage(&spec, &model, &mut store, &task, &options)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    println!(
        "{} on {} task: {} steps, lr {}, initial-window mean {:.6}, final-window mean {:.6}",
        spec.name,
        spec.dataset.as_str(),
        args.steps,
        spec.learning_rate,
        log.initial_window_mean(),
        log.final_window_mean()
    );

    let mut manifest = Manifest::new("train", args.seed, config_bytes.as_deref());
    manifest
        .setting("stage", spec.name)
        .setting("dataset", spec.dataset.as_str())
        .setting("steps", args.steps)
        .setting("batch", args.batch)
        .setting("items", args.items)
        .setting("learning_rate", spec.learning_rate)
        .setting(
            "trainable_scalars",
            store.scalar_count(true).to_string(),
        )
        .setting("total_scalars", store.scalar_count(false).to_string());
    let mut out = OutputDir::create(&args.out, manifest)?;
    out.write("loss.csv", log.to_csv().as_bytes())?;
    let ckpt_path = out.root().join("checkpoint.bin");
    save_store(&ckpt_path, &store).map_err(|e| CliError::Runtime(e.to_string()))?;
    let ckpt_bytes =
        std::fs::read(&ckpt_path).map_err(|e| CliError::Runtime(e.to_string()))?;
    out.write("checkpoint.bin", &ckpt_bytes)?;
    let path = out.finish()?;
    println!("artifacts written to {}", path.parent().unwrap().display());
    Ok(())
}

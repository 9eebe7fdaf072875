//! `run`: synthetic-video forward pass with provenance summary, or a
//! paper-scale shape dry-run. The printed token accounting must agree with
//! `plan` exactly; the stream is verified against the budget report before
//! anything is printed.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use dualtok::budget::{compute_budget, render_report_text, TokenBudgetConfig};
use dualtok::config::ConfigDoc;
use dualtok::encoders::{FlatEncoder, HierEncoder};
use dualtok::fusion::{text, verify_stream, Model, PipelineConfig};
use dualtok::training::synth_video;

use crate::manifest::{Manifest, OutputDir};
use crate::{CliError, DEFAULT_SEED};

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config document overriding the toy pipeline configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Frames in the synthetic source video.
    #[arg(long, default_value_t = 8)]
    pub frames: usize,
    /// Side length of the synthetic source frames.
    #[arg(long, default_value_t = 32)]
    pub frame_size: usize,
    /// Shape-only dry run at paper-scale geometry: no weights, no forward.
    #[arg(long)]
    pub dry_run: bool,
    /// Also compute the next-token loss of a fixed probe sentence.
    #[arg(long)]
    pub loss: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn load_doc(path: &Option<PathBuf>) -> Result<(Option<Vec<u8>>, ConfigDoc), CliError> {
    let bytes = path
        .as_ref()
        .map(std::fs::read)
        .transpose()
        .map_err(|e| CliError::Usage(format!("cannot read config: {e}")))?;
    let doc = match &bytes {
        Some(b) => ConfigDoc::parse(
            std::str::from_utf8(b).map_err(|_| CliError::Usage("config is not UTF-8".into()))?,
        )
        .map_err(|e| CliError::Usage(e.to_string()))?,
        None => ConfigDoc::default(),
    };
    Ok((bytes, doc))
}

fn dry_run(doc: &ConfigDoc) -> Result<(), CliError> {
    let cfg = doc.apply_budget(&TokenBudgetConfig::paper_default());
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let report = compute_budget(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let flat_dim = *cfg.geom_flat.channels_per_stage.last().expect("validated");
    let flat_shape = FlatEncoder::dry_run_shape(&cfg.geom_flat, cfg.n_total, flat_dim)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let hier_shape = HierEncoder::dry_run_shape(&cfg.geom_hier, cfg.n_hiera, cfg.s_stage)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    println!("shape-only dry run (no weights allocated)");
    println!("flat encoder output: {flat_shape:?}");
    println!("hier encoder stage-{} output: {hier_shape:?}", cfg.s_stage);
    print!("{}", render_report_text(&cfg, &report));
    Ok(())
}

pub fn execute(args: &RunArgs) -> Result<(), CliError> {
    let (config_bytes, doc) = load_doc(&args.config)?;
    if args.dry_run {
        return dry_run(&doc);
    }

    let config = doc.apply_pipeline(&PipelineConfig::toy());
    let model = Model::new(config).map_err(|e| CliError::Usage(e.to_string()))?;
    let store = model
        .init_params(args.seed)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let video = synth_video(args.seed, args.frames, args.frame_size, model.config.in_channels, 3);
    let output = model
        .forward(&store, &video)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    verify_stream(&output.stream, &output.report)
        .map_err(|e| CliError::Runtime(format!("stream/plan disagreement: {e}")))?;

    print!("{}", render_report_text(&model.config.budget, &output.report));
    println!();
    println!("fused stream: {} tokens, d_model {}", output.stream.len(), output.stream.dim());
    println!("sampled flat frames: {:?}", output.plan.flat_indices);
    println!("sampled hier frames: {:?}", output.plan.hier_indices);
    println!("{:>8} {:>8} {:>8}", "stream", "frame", "tokens");
    let mut provenance_csv = String::from("stream,frame,tokens\n");
    for (source, frame, count) in output.stream.per_frame_counts() {
        println!("{:>8} {:>8} {:>8}", source.label(), frame, count);
        let _ = writeln!(provenance_csv, "{},{frame},{count}", source.label());
    }

    let loss_line = if args.loss {
        let mut graph = dualtok::numerics::Graph::new();
        let probe = text::encode_with_specials("a scene");
        let loss = model
            .decode_loss(&mut graph, &store, &video, &probe)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let value = graph.value(loss).item();
        println!("probe decode loss: {value}");
        Some(value)
    } else {
        None
    };

    let mut manifest = Manifest::new("run", args.seed, config_bytes.as_deref());
    manifest
        .setting("frames", args.frames)
        .setting("frame_size", args.frame_size)
        .setting("fused_tokens", output.stream.len());
    if let Some(loss) = loss_line {
        manifest.setting("probe_loss", loss);
    }
    let mut out = OutputDir::create(&args.out, manifest)?;
    out.write("provenance.csv", provenance_csv.as_bytes())?;
    out.finish()?;
    Ok(())
}

//! `scaling`: score trajectories over training-data fractions, from report
//! CSVs produced by `score`.

use std::path::PathBuf;

use clap::Args;
use dualtok::evalkit::{emit_scaling_curve, ScoreReport};

use crate::manifest::{Manifest, OutputDir};
use crate::{CliError, DEFAULT_SEED};

#[derive(Debug, Args)]
pub struct ScalingArgs {
    /// Points as FRACTION=REPORT_CSV, e.g. 0.25=runs/q1/report.csv.
    /// Fractions must be strictly increasing in (0, 1].
    #[arg(required = true)]
    pub points: Vec<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn execute(args: &ScalingArgs) -> Result<(), CliError> {
    let mut points = Vec::with_capacity(args.points.len());
    let mut sources = Vec::new();
    for spec in &args.points {
        let (fraction, path) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected FRACTION=CSV, got {spec:?}")))?;
        let fraction: f64 = fraction
            .parse()
            .map_err(|_| CliError::Usage(format!("bad fraction {fraction:?}")))?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
        let report = ScoreReport::from_csv(&text).map_err(|e| CliError::Usage(e.to_string()))?;
        sources.push(format!("{fraction}={path}"));
        points.push((fraction, report));
    }
    let curve = emit_scaling_curve(&points).map_err(|e| CliError::Usage(e.to_string()))?;
    print!("{}", curve.csv);

    let mut manifest = Manifest::new("scaling", DEFAULT_SEED, Some(sources.join("\n").as_bytes()));
    manifest.setting("points", points.len());
    let mut out = OutputDir::create(&args.out, manifest)?;
    out.write("scaling.csv", curve.csv.as_bytes())?;
    out.write("scaling.svg", curve.svg.as_bytes())?;
    out.finish()?;
    Ok(())
}

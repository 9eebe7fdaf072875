//! `score`: per-task table from a line-delimited prediction file.

use std::path::PathBuf;

use clap::Args;
use dualtok::evalkit::{emit_report, load_records, EvalError};

use crate::manifest::{Manifest, OutputDir};
use crate::{CliError, DEFAULT_SEED};

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Line-delimited prediction records (one JSON object per line).
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn execute(args: &ScoreArgs) -> Result<(), CliError> {
    let pred_bytes = std::fs::read(&args.pred)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.pred.display())))?;
    let records = load_records(&args.pred).map_err(|e| match e {
        EvalError::Malformed { .. } => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    })?;
    let report = emit_report(&records).map_err(|e| CliError::Usage(e.to_string()))?;

    let markdown = report.to_markdown();
    print!("{markdown}");
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }

    let mut manifest = Manifest::new("score", DEFAULT_SEED, Some(&pred_bytes));
    manifest
        .setting("records", records.len())
        .setting("average", report.average);
    let mut out = OutputDir::create(&args.out, manifest)?;
    out.write("report.csv", report.to_csv().as_bytes())?;
    out.write("report.md", markdown.as_bytes())?;
    out.finish()?;
    Ok(())
}

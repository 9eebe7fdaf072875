//! `plan`: token accounting for one configuration, and budget-constrained
//! enumeration of control triplets.

use std::path::PathBuf;

use clap::Args;
use dualtok::budget::{
    compute_budget, enumerate_configs, render_report_csv_row, render_report_text,
    TokenBudgetConfig, REPORT_CSV_HEADER,
};
use dualtok::config::ConfigDoc;

use crate::manifest::{Manifest, OutputDir};
use crate::{CliError, DEFAULT_SEED};

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Config document overriding the default geometry and triplet.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Enumerate all triplets whose total stays within this many tokens.
    #[arg(long)]
    pub budget: Option<u64>,
    /// With --budget: write the full feasible set as CSV to the output dir.
    #[arg(long)]
    pub sweep: bool,
    /// Output directory for CSV artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn execute(args: &PlanArgs) -> Result<(), CliError> {
    let config_bytes = args
        .config
        .as_ref()
        .map(std::fs::read)
        .transpose()
        .map_err(|e| CliError::Usage(format!("cannot read config: {e}")))?;
    let doc = match &config_bytes {
        Some(bytes) => ConfigDoc::parse(
            std::str::from_utf8(bytes)
                .map_err(|_| CliError::Usage("config is not UTF-8".into()))?,
        )
        .map_err(|e| CliError::Usage(e.to_string()))?,
        None => ConfigDoc::default(),
    };
    let cfg = doc.apply_budget(&TokenBudgetConfig::paper_default());
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let report = compute_budget(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    print!("{}", render_report_text(&cfg, &report));

    let Some(budget) = args.budget else {
        if args.sweep {
            return Err(CliError::Usage("--sweep requires --budget".into()));
        }
        return Ok(());
    };

    let feasible = enumerate_configs(budget, &cfg.geom_flat, &cfg.geom_hier, cfg.n_total)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    println!();
    if feasible.is_empty() {
        println!("no feasible config within {budget} tokens");
        return Ok(());
    }
    println!(
        "{} feasible configs within {budget} tokens (best by spatial tokens first):",
        feasible.len()
    );
    println!("{:>8} {:>8} {:>8} {:>12} {:>12} {:>8}", "n_hiera", "s_stage", "s_pool", "t_hier", "total", "ratio");
    for (cfg, report) in feasible.iter().take(10) {
        println!(
            "{:>8} {:>8} {:>8} {:>12} {:>12} {:>8}",
            cfg.n_hiera,
            cfg.s_stage,
            cfg.s_pool,
            report.t_hier,
            report.total(),
            report.ratio_display()
        );
    }
    if feasible.len() > 10 {
        println!("... {} more", feasible.len() - 10);
    }

    if args.sweep {
        let mut manifest = Manifest::new("plan", DEFAULT_SEED, config_bytes.as_deref());
        manifest.setting("budget", budget);
        let mut out = OutputDir::create(&args.out, manifest)?;
        let mut csv = String::from(REPORT_CSV_HEADER);
        csv.push('\n');
        for (cfg, report) in &feasible {
            csv.push_str(&render_report_csv_row(cfg, report));
            csv.push('\n');
        }
        out.write("sweep.csv", csv.as_bytes())?;
        let path = out.finish()?;
        println!("sweep written to {}", path.parent().unwrap().display());
    }
    Ok(())
}

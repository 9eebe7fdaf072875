//! Command-line front end for the dual vision-encoder token pipeline:
//! budget planning, forward passes, staged training, scoring, scaling
//! curves, and the external-judge workflow.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 runtime error,
//! 4 external-service error.

mod commands;
mod manifest;

use clap::{Parser, Subcommand};

/// Seed used when none is given, so bare invocations are reproducible.
pub const DEFAULT_SEED: u64 = 17;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
    External(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::External(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) | CliError::External(m) => f.write_str(m),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "dualtok",
    version,
    about = "Dual vision-encoder token pipeline: plan token budgets, run the toy pipeline, train stages, score predictions, plot scaling, and drive the judge workflow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Token accounting for a configuration; optionally enumerate a budget.
    Plan(commands::plan::PlanArgs),
    /// Forward pass on a synthetic video (or a paper-scale shape dry run).
    Run(commands::run::RunArgs),
    /// Train one schedule stage on its synthetic task.
    Train(commands::train::TrainArgs),
    /// Score a line-delimited prediction file into a per-task table.
    Score(commands::score::ScoreArgs),
    /// Emit scaling curves from per-fraction score reports.
    Scaling(commands::scaling::ScalingArgs),
    /// Judge four labeled descriptions per request and aggregate scores.
    Judge(commands::judge::JudgeArgs),
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Plan(args) => commands::plan::execute(&args),
        Command::Run(args) => commands::run::execute(&args),
        Command::Train(args) => commands::train::execute(&args),
        Command::Score(args) => commands::score::execute(&args),
        Command::Scaling(args) => commands::scaling::execute(&args),
        Command::Judge(args) => commands::judge::execute(&args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = dispatch(cli) {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}

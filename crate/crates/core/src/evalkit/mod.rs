//! Benchmark-protocol tooling: prediction-file scorers (exact-match multiple
//! choice and threshold-ladder mean relative accuracy), per-task report
//! tables, scaling-curve emission, and the external-judge workflow.

pub mod judge;
pub mod records;
pub mod report;
pub mod scaling;
pub mod scoring;

pub use judge::{
    aggregate_scores, build_judge_prompt, judge_all, parse_judge_scores, AuditEntry,
    FixtureTransport, HttpTransport, JudgeAggregate, JudgeClient, JudgeRequest, JudgeScores,
    JudgeTransport, JUDGE_API_KEY_ENV, MODEL_KEYS,
};
pub use records::{load_records, parse_records, records_to_jsonl, Answer, PredictionRecord, TaskName};
pub use report::{emit_report, report_from_task_scores, ScoreReport, TaskScore};
pub use scaling::{emit_scaling_curve, ScalingCurve};
pub use scoring::{default_mra_thresholds, score_mcq, score_mra};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty record set: score undefined")]
    EmptyRecordSet,
    #[error("mixed answer kinds: expected only {expected}")]
    MixedKinds { expected: &'static str },
    #[error("gold value is zero for record {question_id}: relative error undefined")]
    GoldZero { question_id: String },
    #[error("record {question_id}: answer kind does not match task {task}")]
    KindMismatch {
        task: &'static str,
        question_id: String,
    },
    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("invalid input: {0}")]
    InputError(String),
    #[error("no fenced score block in judge response")]
    MissingScoreBlock,
    #[error("score block is not valid JSON: {0}")]
    ScoreBlockInvalid(String),
    #[error("score block is missing key {0}")]
    MissingScoreKey(char),
    #[error("score for {key} is not an integer: {value}")]
    NonIntegerScore { key: char, value: String },
    #[error("score for {key} out of range 0..=10: {value}")]
    ScoreOutOfRange { key: char, value: i64 },
    #[error("missing API key environment variable {0}")]
    MissingApiKey(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("judge service returned status {status}: {body_excerpt}")]
    Service { status: u16, body_excerpt: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

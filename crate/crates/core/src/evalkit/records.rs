//! Benchmark prediction records and their line-delimited file format.
//!
//! One self-describing JSON record per line. Ingestion is fail-fast: the
//! first malformed line aborts with its line number.

use serde::{Deserialize, Serialize};

use super::EvalError;

/// The eight benchmark tasks, in report column order: four numeric-answer
/// tasks, then four multiple-choice tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskName {
    ObjCount,
    AbsDist,
    ObjSize,
    RoomSize,
    RelDist,
    RelDir,
    RoutePlan,
    ApprOrder,
}

impl TaskName {
    pub const ALL: [TaskName; 8] = [
        TaskName::ObjCount,
        TaskName::AbsDist,
        TaskName::ObjSize,
        TaskName::RoomSize,
        TaskName::RelDist,
        TaskName::RelDir,
        TaskName::RoutePlan,
        TaskName::ApprOrder,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskName::ObjCount => "obj_count",
            TaskName::AbsDist => "abs_dist",
            TaskName::ObjSize => "obj_size",
            TaskName::RoomSize => "room_size",
            TaskName::RelDist => "rel_dist",
            TaskName::RelDir => "rel_dir",
            TaskName::RoutePlan => "route_plan",
            TaskName::ApprOrder => "appr_order",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            TaskName::ObjCount => "Obj. Count",
            TaskName::AbsDist => "Abs. Dist.",
            TaskName::ObjSize => "Obj. Size",
            TaskName::RoomSize => "Room Size",
            TaskName::RelDist => "Rel. Dist.",
            TaskName::RelDir => "Rel. Dir.",
            TaskName::RoutePlan => "Route Plan",
            TaskName::ApprOrder => "Appr. Order",
        }
    }

    /// Numeric-answer tasks score by mean relative accuracy; the rest are
    /// exact-match multiple choice.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            TaskName::ObjCount | TaskName::AbsDist | TaskName::ObjSize | TaskName::RoomSize
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Answer {
    Numeric { predicted: f64, gold: f64 },
    MultipleChoice { predicted: String, gold: String },
}

impl Answer {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Answer::Numeric { .. })
    }
}

/// One benchmark answer: task, question id, predicted and gold values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub task: TaskName,
    pub question_id: String,
    #[serde(flatten)]
    pub answer: Answer,
}

impl PredictionRecord {
    /// The answer kind must match the task's grouping.
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.task.is_numeric() != self.answer.is_numeric() {
            return Err(EvalError::KindMismatch {
                task: self.task.as_str(),
                question_id: self.question_id.clone(),
            });
        }
        Ok(())
    }
}

/// Parse line-delimited records, validating each. Blank lines are allowed.
pub fn parse_records(text: &str) -> Result<Vec<PredictionRecord>, EvalError> {
    let mut records = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord =
            serde_json::from_str(line).map_err(|e| EvalError::Malformed {
                line: index + 1,
                message: e.to_string(),
            })?;
        record.validate().map_err(|e| EvalError::Malformed {
            line: index + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn load_records(path: &std::path::Path) -> Result<Vec<PredictionRecord>, EvalError> {
    parse_records(&std::fs::read_to_string(path)?)
}

pub fn records_to_jsonl(records: &[PredictionRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

//! Per-task score tables: Average first, then the four numeric tasks, then
//! the four multiple-choice tasks. Display rounds to one decimal place; CSV
//! keeps full precision.

use serde::{Deserialize, Serialize};

use super::records::{PredictionRecord, TaskName};
use super::scoring::{default_mra_thresholds, score_mcq, score_mra};
use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub task: TaskName,
    /// None when the prediction file had no records for the task.
    pub score: Option<f64>,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    /// One entry per task, in column order.
    pub tasks: Vec<TaskScore>,
    /// Unweighted mean over the present tasks.
    pub average: f64,
    pub warnings: Vec<String>,
}

impl ScoreReport {
    pub fn score_for(&self, task: TaskName) -> Option<f64> {
        self.tasks
            .iter()
            .find(|t| t.task == task)
            .and_then(|t| t.score)
    }

    /// Markdown table in display rounding (one decimal place).
    pub fn to_markdown(&self) -> String {
        let mut header = String::from("| Average |");
        let mut align = String::from("|---|");
        let mut row = format!("| {:.1} |", self.average);
        for task in &self.tasks {
            header.push_str(&format!(" {} |", task.task.display_name()));
            align.push_str("---|");
            match task.score {
                Some(score) => row.push_str(&format!(" {score:.1} |")),
                None => row.push_str(" - |"),
            }
        }
        format!("{header}\n{align}\n{row}\n")
    }

    /// Parse the two-line CSV written by [`ScoreReport::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, EvalError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| EvalError::InputError("empty score CSV".into()))?;
        let row = lines
            .next()
            .ok_or_else(|| EvalError::InputError("score CSV has no data row".into()))?;
        let columns: Vec<&str> = header.split(',').collect();
        let values: Vec<&str> = row.split(',').collect();
        if columns.len() != values.len() || columns.first() != Some(&"average") {
            return Err(EvalError::InputError("malformed score CSV header".into()));
        }
        let mut scores = Vec::new();
        for (column, value) in columns.iter().zip(values.iter()).skip(1) {
            let task = TaskName::ALL
                .iter()
                .find(|t| t.as_str() == *column)
                .ok_or_else(|| EvalError::InputError(format!("unknown task column {column}")))?;
            if *value == "absent" {
                continue;
            }
            let score: f64 = value
                .parse()
                .map_err(|_| EvalError::InputError(format!("bad score {value} for {column}")))?;
            scores.push((*task, score));
        }
        Ok(report_from_task_scores(&scores))
    }

    /// CSV at full precision, one column per task plus the average.
    pub fn to_csv(&self) -> String {
        let mut header = String::from("average");
        let mut row = self.average.to_string();
        for task in &self.tasks {
            header.push(',');
            header.push_str(task.task.as_str());
            row.push(',');
            match task.score {
                Some(score) => row.push_str(&score.to_string()),
                None => row.push_str("absent"),
            }
        }
        format!("{header}\n{row}\n")
    }
}

/// Score every task present in `records`. Tasks with no records are marked
/// absent, excluded from the average, and reported as warnings.
pub fn emit_report(records: &[PredictionRecord]) -> Result<ScoreReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecordSet);
    }
    for record in records {
        record.validate()?;
    }
    let thresholds = default_mra_thresholds();
    let mut tasks = Vec::with_capacity(TaskName::ALL.len());
    let mut warnings = Vec::new();
    let mut sum = 0.0;
    let mut present = 0usize;
    for task in TaskName::ALL {
        let subset: Vec<PredictionRecord> = records
            .iter()
            .filter(|r| r.task == task)
            .cloned()
            .collect();
        let score = if subset.is_empty() {
            warnings.push(format!(
                "task {} has no records and is excluded from the average",
                task.as_str()
            ));
            None
        } else if task.is_numeric() {
            Some(score_mra(&subset, &thresholds)?)
        } else {
            Some(score_mcq(&subset)?)
        };
        if let Some(s) = score {
            sum += s;
            present += 1;
        }
        tasks.push(TaskScore {
            task,
            score,
            records: subset.len(),
        });
    }
    Ok(ScoreReport {
        tasks,
        average: sum / present as f64,
        warnings,
    })
}

/// A report from externally computed per-task scores (for fixtures and
/// scaling curves), same averaging rule as [`emit_report`].
pub fn report_from_task_scores(scores: &[(TaskName, f64)]) -> ScoreReport {
    let mut tasks = Vec::with_capacity(TaskName::ALL.len());
    let mut warnings = Vec::new();
    let mut sum = 0.0;
    let mut present = 0usize;
    for task in TaskName::ALL {
        let score = scores.iter().find(|(t, _)| *t == task).map(|(_, s)| *s);
        match score {
            Some(s) => {
                sum += s;
                present += 1;
            }
            None => warnings.push(format!(
                "task {} has no records and is excluded from the average",
                task.as_str()
            )),
        }
        tasks.push(TaskScore {
            task,
            score,
            records: 0,
        });
    }
    ScoreReport {
        tasks,
        average: sum / present as f64,
        warnings,
    }
}

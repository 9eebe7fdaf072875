//! Scorers: exact-match multiple choice and threshold-ladder mean relative
//! accuracy for numeric answers.

use super::records::{Answer, PredictionRecord};
use super::EvalError;

/// The ten-threshold ladder {0.50, 0.55, ..., 0.95}.
pub fn default_mra_thresholds() -> Vec<f64> {
    (10..=19).map(|i| i as f64 / 20.0).collect()
}

/// 100 x exact-match fraction on option letters, case-insensitive.
pub fn score_mcq(records: &[PredictionRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecordSet);
    }
    let mut correct = 0usize;
    for record in records {
        match &record.answer {
            Answer::MultipleChoice { predicted, gold } => {
                if predicted.trim().eq_ignore_ascii_case(gold.trim()) {
                    correct += 1;
                }
            }
            Answer::Numeric { .. } => {
                return Err(EvalError::MixedKinds {
                    expected: "multiple_choice",
                });
            }
        }
    }
    Ok(100.0 * correct as f64 / records.len() as f64)
}

/// Mean relative accuracy: a record passes threshold theta when
/// |pred - gold| / |gold| < 1 - theta. The score is 100 x the mean pass rate
/// over records and thresholds. A zero gold value is an error, not a skip.
pub fn score_mra(records: &[PredictionRecord], thresholds: &[f64]) -> Result<f64, EvalError> {
    if records.is_empty() || thresholds.is_empty() {
        return Err(EvalError::EmptyRecordSet);
    }
    let mut passes = 0usize;
    for record in records {
        let (predicted, gold) = match &record.answer {
            Answer::Numeric { predicted, gold } => (*predicted, *gold),
            Answer::MultipleChoice { .. } => {
                return Err(EvalError::MixedKinds { expected: "numeric" });
            }
        };
        if gold == 0.0 {
            return Err(EvalError::GoldZero {
                question_id: record.question_id.clone(),
            });
        }
        let relative_error = (predicted - gold).abs() / gold.abs();
        passes += thresholds
            .iter()
            .filter(|&&theta| relative_error < 1.0 - theta)
            .count();
    }
    Ok(100.0 * passes as f64 / (records.len() * thresholds.len()) as f64)
}

//! Joins predictions against the target column and scores the result.
//!
//! Matching is per-row argmin: exact equality, Levenshtein distance, or
//! absolute numeric distance, optionally bounded. Precision counts correct
//! matches among rows that matched; recall counts them among all source
//! rows, so rows that produced no prediction (synthesis failure, runtime
//! fault, empty output) hurt recall only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{CellValue, ExamplePair, ExampleSet, TransformClass};

#[derive(Debug, Error)]
pub enum JoinError {
    #[error("{predictions} predictions for {rows} source rows")]
    ArityMismatch { predictions: usize, rows: usize },
    #[error("matching requires a target column")]
    MissingTargetColumn,
    #[error("positional gold alignment needs equal lengths, got {source_rows} source rows and {target_rows} target rows")]
    GoldArity { source_rows: usize, target_rows: usize },
}

/// Levenshtein distance (unit-cost insert/delete/substitute) over Unicode
/// scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    if a == b {
        return 0;
    }
    let a_chars: Vec<char> = a.chars().collect();
    let b_chars: Vec<char> = b.chars().collect();
    if a_chars.is_empty() {
        return b_chars.len();
    }
    if b_chars.is_empty() {
        return a_chars.len();
    }

    // Two-row dynamic program.
    let mut prev: Vec<usize> = (0..=b_chars.len()).collect();
    let mut curr = vec![0usize; b_chars.len() + 1];
    for (i, &ca) in a_chars.iter().enumerate() {
        curr[0] = i + 1;
        for (j, &cb) in b_chars.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            curr[j + 1] = substitute.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b_chars.len()]
}

/// How predictions are matched against the target column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MatchMode {
    Exact,
    EditDistance { max_distance: Option<f64> },
    /// Absolute numeric difference; meaningful for Numbers-class runs.
    NumericDistance { max_distance: Option<f64> },
}

impl MatchMode {
    pub fn name(&self) -> &'static str {
        match self {
            MatchMode::Exact => "exact",
            MatchMode::EditDistance { .. } => "edit",
            MatchMode::NumericDistance { .. } => "numeric",
        }
    }
}

#[derive(Debug, Error)]
#[error("prediction {0:?} is not numeric")]
pub struct NonNumericPrediction(pub String);

/// Finds the best target for one prediction: `Ok(None)` when nothing
/// qualifies (no exact equal, all targets non-numeric, or the bound
/// excluded the minimum). Ties break to the smallest index.
pub fn match_one(
    prediction: &CellValue,
    targets: &[CellValue],
    mode: &MatchMode,
) -> Result<Option<(usize, f64)>, NonNumericPrediction> {
    match mode {
        MatchMode::Exact => Ok(targets
            .iter()
            .position(|t| t.raw() == prediction.raw())
            .map(|index| (index, 0.0))),
        MatchMode::EditDistance { max_distance } => {
            let mut best: Option<(usize, f64)> = None;
            for (index, target) in targets.iter().enumerate() {
                let distance = edit_distance(prediction.raw(), target.raw()) as f64;
                if best.is_none_or(|(_, d)| distance < d) {
                    best = Some((index, distance));
                }
            }
            Ok(best.filter(|&(_, d)| max_distance.is_none_or(|max| d <= max)))
        }
        MatchMode::NumericDistance { max_distance } => {
            let value = prediction
                .numeric()
                .ok_or_else(|| NonNumericPrediction(prediction.raw().to_string()))?;
            let mut best: Option<(usize, f64)> = None;
            for (index, target) in targets.iter().enumerate() {
                let Some(tv) = target.numeric() else { continue };
                let distance = (value - tv).abs();
                if best.is_none_or(|(_, d)| distance < d) {
                    best = Some((index, distance));
                }
            }
            Ok(best.filter(|&(_, d)| max_distance.is_none_or(|max| d <= max)))
        }
    }
}

/// Per-row join outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowOutcome {
    pub source: CellValue,
    pub prediction: Option<CellValue>,
    pub matched_target: Option<CellValue>,
    pub matched_index: Option<usize>,
    pub distance: Option<f64>,
}

/// Join scoring plus the per-row trace and the interpretable artifact that
/// produced the predictions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JoinReport {
    pub rows: Vec<RowOutcome>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub aed: f64,
    pub aned: f64,
    pub class: TransformClass,
    pub program_text: Option<String>,
}

/// Which target value counts as correct for each source row.
#[derive(Debug, Clone)]
pub enum GoldAlignment {
    /// Row i of the source corresponds to row i of the target column.
    Positional,
    /// Explicit (source, gold target) pairs; overrides positions.
    Pairs(Vec<ExamplePair>),
}

impl GoldAlignment {
    fn gold_for(&self, set: &ExampleSet, row: usize) -> Option<CellValue> {
        match self {
            GoldAlignment::Positional => {
                set.target_column.as_ref().and_then(|t| t.get(row)).cloned()
            }
            GoldAlignment::Pairs(pairs) => {
                let source = set.source_column.get(row)?;
                pairs.iter().find(|p| p.source.raw() == source.raw()).map(|p| p.target.clone())
            }
        }
    }
}

/// Scores predictions against the target column under `mode`.
pub fn join(
    set: &ExampleSet,
    predictions: &[Option<CellValue>],
    mode: &MatchMode,
    gold: &GoldAlignment,
    class: TransformClass,
    program_text: Option<String>,
) -> Result<JoinReport, JoinError> {
    let rows = set.source_column.len();
    if predictions.len() != rows {
        return Err(JoinError::ArityMismatch { predictions: predictions.len(), rows });
    }
    let targets = set.target_column.as_deref().ok_or(JoinError::MissingTargetColumn)?;
    if matches!(gold, GoldAlignment::Positional) && targets.len() != rows {
        return Err(JoinError::GoldArity { source_rows: rows, target_rows: targets.len() });
    }

    let mut outcomes = Vec::with_capacity(rows);
    let mut matched = 0usize;
    let mut correct = 0usize;
    let mut scored = 0usize;
    let mut ed_sum = 0.0;
    let mut ned_sum = 0.0;

    for (row, source) in set.source_column.iter().enumerate() {
        let prediction = predictions[row].clone();
        let gold_value = gold.gold_for(set, row);

        let hit = match &prediction {
            // A non-numeric prediction under numeric matching leaves the
            // row unmapped rather than failing the whole join.
            Some(pred) => match_one(pred, targets, mode).unwrap_or(None),
            None => None,
        };

        if let (Some(pred), Some(gold_value)) = (&prediction, &gold_value) {
            let distance = edit_distance(pred.raw(), gold_value.raw()) as f64;
            ed_sum += distance;
            ned_sum += distance / gold_value.raw().chars().count().max(1) as f64;
            scored += 1;
        }
        if let Some((index, _)) = hit {
            matched += 1;
            if gold_value.as_ref().is_some_and(|g| g.raw() == targets[index].raw()) {
                correct += 1;
            }
        }

        outcomes.push(RowOutcome {
            source: source.clone(),
            prediction,
            matched_target: hit.map(|(index, _)| targets[index].clone()),
            matched_index: hit.map(|(index, _)| index),
            distance: hit.map(|(_, distance)| distance),
        });
    }

    let precision = if matched == 0 { 0.0 } else { correct as f64 / matched as f64 };
    let recall = if rows == 0 { 0.0 } else { correct as f64 / rows as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let aed = if scored == 0 { 0.0 } else { ed_sum / scored as f64 };
    let aned = if scored == 0 { 0.0 } else { ned_sum / scored as f64 };

    Ok(JoinReport { rows: outcomes, precision, recall, f1, aed, aned, class, program_text })
}

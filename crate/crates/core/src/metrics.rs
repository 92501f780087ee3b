//! Error measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries with `|truth| <= ZERO_TRUTH` are left out of relative errors.
pub const ZERO_TRUTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rmse: f64,
    pub max_relative_error: f64,
    pub mean_relative_error: f64,
    pub n_evaluated: usize,
    pub n_skipped_zero_truth: usize,
}

/// RMSE over all entries; max and mean of `|truth - pred| / |truth|` over
/// entries with nonzero truth.
pub fn error_report(truth: &[f64], pred: &[f64]) -> Result<ErrorReport> {
    if truth.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "truth has {} entries, predictions {}",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate zero entries".into()));
    }
    let mut sq = 0.0;
    let mut rel_sum = 0.0;
    let mut rel_max: f64 = 0.0;
    let mut evaluated = 0;
    for (t, p) in truth.iter().zip(pred) {
        let e = t - p;
        sq += e * e;
        if t.abs() > ZERO_TRUTH {
            let rel = e.abs() / t.abs();
            rel_sum += rel;
            rel_max = rel_max.max(rel);
            evaluated += 1;
        }
    }
    Ok(ErrorReport {
        rmse: (sq / truth.len() as f64).sqrt(),
        max_relative_error: rel_max,
        mean_relative_error: if evaluated > 0 { rel_sum / evaluated as f64 } else { 0.0 },
        n_evaluated: evaluated,
        n_skipped_zero_truth: truth.len() - evaluated,
    })
}

pub fn rmse(truth: &[f64], pred: &[f64]) -> Result<f64> {
    error_report(truth, pred).map(|r| r.rmse)
}

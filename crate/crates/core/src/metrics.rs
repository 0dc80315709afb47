//! Forecast error measures and comparison tables.
//!
//! MAE and RMSE are reported in m/s, NRMSE as a percentage of the observed
//! range over the evaluation span. Reduction percentages compare two NRMSE
//! figures the way forecast improvements are usually quoted.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn check_pair(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(())
}

/// Mean absolute error in m/s.
pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).abs())
        .sum();
    Ok(sum / actual.len() as f64)
}

/// Root mean squared error in m/s.
pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    Ok((sum / actual.len() as f64).sqrt())
}

/// RMSE normalized by the observed range, in percent.
pub fn nrmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &a in actual {
        lo = lo.min(a);
        hi = hi.max(a);
    }
    let range = hi - lo;
    if range <= 0.0 {
        return Err(Error::ZeroRange);
    }
    Ok(100.0 * rmse(actual, predicted)? / range)
}

/// Percentage reduction of `improved` relative to `base`, to one decimal.
pub fn reduction(base: f64, improved: f64) -> Result<f64> {
    if base <= 0.0 {
        return Err(Error::NonPositiveBase(base));
    }
    Ok((1000.0 * (base - improved) / base).round() / 10.0)
}

/// One method's row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub mae_ms: f64,
    pub rmse_ms: f64,
    pub nrmse_pct: f64,
}

/// Error statistics for one recursion depth (hours past the refresh point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub step: usize,
    pub count: usize,
    pub mae_ms: f64,
    pub rmse_ms: f64,
}

/// Per-method horizon-step breakdown (JSON report only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepBreakdown {
    pub method: String,
    pub steps: Vec<StepStats>,
}

/// Comparison table over one validation span.
///
/// The NRMSE range is taken over the target's observed values within the
/// evaluated span, which the `span` field records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub target: String,
    /// Validation hour range `[from, to)` in dataset coordinates.
    pub span: [usize; 2],
    pub rows: Vec<ReportRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_step: Vec<StepBreakdown>,
}

impl EvaluationReport {
    pub fn new(target: impl Into<String>, span: [usize; 2]) -> Self {
        EvaluationReport {
            target: target.into(),
            span,
            rows: Vec::new(),
            per_step: Vec::new(),
        }
    }

    /// Computes and appends one method's row.
    pub fn push_method(&mut self, method: &str, actual: &[f64], predicted: &[f64]) -> Result<()> {
        self.rows.push(ReportRow {
            method: method.to_string(),
            mae_ms: mae(actual, predicted)?,
            rmse_ms: rmse(actual, predicted)?,
            nrmse_pct: nrmse(actual, predicted)?,
        });
        Ok(())
    }

    pub fn row(&self, method: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// CSV body with the fixed `method,mae_ms,rmse_ms,nrmse_pct` columns.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("method,mae_ms,rmse_ms,nrmse_pct\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.method, row.mae_ms, row.rmse_ms, row.nrmse_pct
            ));
        }
        out
    }
}

/// Groups prediction errors by recursion depth.
///
/// `hours` are the predicted hour indices; refresh cycles start at `split`
/// and repeat every `horizon` hours, so hour `h` sits at step
/// `(h - split) % horizon + 1`.
pub fn step_breakdown(
    method: &str,
    hours: &[usize],
    actual: &[f64],
    predicted: &[f64],
    split: usize,
    horizon: usize,
) -> Result<StepBreakdown> {
    check_pair(actual, predicted)?;
    if hours.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: hours.len(),
            right: actual.len(),
        });
    }
    if horizon == 0 {
        return Err(Error::Window("horizon must be >= 1".into()));
    }
    let mut buckets: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); horizon];
    for ((&h, &a), &p) in hours.iter().zip(actual).zip(predicted) {
        let step = (h - split) % horizon;
        buckets[step].0.push(a);
        buckets[step].1.push(p);
    }
    let mut steps = Vec::new();
    for (i, (a, p)) in buckets.iter().enumerate() {
        if a.is_empty() {
            continue;
        }
        steps.push(StepStats {
            step: i + 1,
            count: a.len(),
            mae_ms: mae(a, p)?,
            rmse_ms: rmse(a, p)?,
        });
    }
    Ok(StepBreakdown {
        method: method.to_string(),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn mae_hand_values() {
        assert!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap().abs() < TOL);
        assert!((mae(&[0.0, 2.0], &[1.0, 1.0]).unwrap() - 1.0).abs() < TOL);
        assert!((mae(&[1.0, 2.0, 3.0], &[2.0, 4.0, 3.0]).unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn rmse_hand_values() {
        assert!(rmse(&[5.0], &[5.0]).unwrap().abs() < TOL);
        assert!((rmse(&[0.0, 2.0], &[1.0, 1.0]).unwrap() - 1.0).abs() < TOL);
        let expected = (5.0f64 / 3.0).sqrt();
        assert!((rmse(&[1.0, 2.0, 3.0], &[2.0, 4.0, 3.0]).unwrap() - expected).abs() < TOL);
    }

    #[test]
    fn nrmse_hand_values_and_zero_range() {
        assert!((nrmse(&[0.0, 2.0], &[1.0, 1.0]).unwrap() - 50.0).abs() < TOL);
        assert!(matches!(
            nrmse(&[3.0, 3.0], &[1.0, 2.0]).unwrap_err(),
            Error::ZeroRange
        ));
    }

    #[test]
    fn nrmse_is_affine_invariant() {
        let a = [1.0, 4.0, 2.0, 5.0];
        let p = [1.5, 3.5, 2.5, 4.0];
        let base = nrmse(&a, &p).unwrap();
        let (alpha, beta) = (3.7, 11.0);
        let a2: Vec<f64> = a.iter().map(|v| alpha * v + beta).collect();
        let p2: Vec<f64> = p.iter().map(|v| alpha * v + beta).collect();
        assert!((nrmse(&a2, &p2).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn reduction_matches_quoted_percentages() {
        assert_eq!(reduction(16.86, 10.46).unwrap(), 38.0);
        assert_eq!(reduction(13.08, 10.46).unwrap(), 20.0);
        assert_eq!(reduction(16.40, 10.46).unwrap(), 36.2);
        assert_eq!(reduction(12.25, 12.25).unwrap(), 0.0);
        assert!(matches!(
            reduction(0.0, 1.0).unwrap_err(),
            Error::NonPositiveBase(_)
        ));
    }

    #[test]
    fn errors_on_mismatch_and_empty() {
        assert!(matches!(
            mae(&[1.0], &[1.0, 2.0]).unwrap_err(),
            Error::LengthMismatch { .. }
        ));
        assert!(matches!(rmse(&[], &[]).unwrap_err(), Error::EmptySeries));
    }

    #[test]
    fn rmse_dominates_mae_on_random_pairs() {
        // cheap LCG; no need for a real RNG here
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0
        };
        for _ in 0..1000 {
            let a: Vec<f64> = (0..17).map(|_| next()).collect();
            let p: Vec<f64> = (0..17).map(|_| next()).collect();
            assert!(rmse(&a, &p).unwrap() >= mae(&a, &p).unwrap() - 1e-12);
        }
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let p = [1.5, 1.0, 3.5, 5.0];
        let perm = [2usize, 0, 3, 1];
        let ap: Vec<f64> = perm.iter().map(|&i| a[i]).collect();
        let pp: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
        assert!((mae(&a, &p).unwrap() - mae(&ap, &pp).unwrap()).abs() < TOL);
        assert!((rmse(&a, &p).unwrap() - rmse(&ap, &pp).unwrap()).abs() < TOL);
        assert!((nrmse(&a, &p).unwrap() - nrmse(&ap, &pp).unwrap()).abs() < TOL);
    }

    #[test]
    fn step_breakdown_buckets_by_cycle_position() {
        let hours = [10, 11, 12, 13, 14, 15];
        let actual = [1.0; 6];
        let predicted = [2.0, 1.0, 2.0, 3.0, 1.0, 1.0];
        let bd = step_breakdown("m", &hours, &actual, &predicted, 10, 3).unwrap();
        assert_eq!(bd.steps.len(), 3);
        assert_eq!(bd.steps[0].count, 2);
        assert!((bd.steps[0].mae_ms - 1.5).abs() < TOL); // hours 10, 13
        assert!((bd.steps[1].mae_ms - 0.0).abs() < TOL); // hours 11, 14
    }

    #[test]
    fn report_assembles_rows_and_csv() {
        let mut report = EvaluationReport::new("s0", [10, 16]);
        report
            .push_method("persistence", &[0.0, 2.0], &[1.0, 1.0])
            .unwrap();
        assert_eq!(report.rows.len(), 1);
        let row = report.row("persistence").unwrap();
        assert!(row.rmse_ms >= row.mae_ms);
        let csv = report.to_csv_string();
        assert!(csv.starts_with("method,mae_ms,rmse_ms,nrmse_pct\n"));
        assert!(csv.contains("persistence,1,1,50"));
    }
}

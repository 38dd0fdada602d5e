//! Serializable experiment reports.
//!
//! A convergence report carries its rows sorted by parameter, the fitted
//! log-log slope (or the reason no slope is fittable), and the exact
//! configuration that produced it. `abs_error` is stored redundantly and
//! revalidated bit-exactly on load, so a hand-edited report cannot pass
//! itself off as computed.

use crate::error::Error;
use crate::quadrature::{fit_slope, SlopeFit};
use crate::Result;
use serde::{Deserialize, Serialize};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub parameter: f64,
    pub value: f64,
    pub reference: f64,
    pub abs_error: f64,
}

impl ReportRow {
    pub fn new(parameter: f64, value: f64, reference: f64) -> ReportRow {
        ReportRow {
            parameter,
            value,
            reference,
            abs_error: (value - reference).abs(),
        }
    }
}

/// A slope is only meaningful when the errors sit above the scheme's own
/// noise; reports from zero-reference experiments say so instead of fitting
/// noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlopeEstimate {
    Fitted { slope: f64, half_width: f64 },
    Degenerate { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    pub slope: SlopeEstimate,
    /// Exact run configuration, embedded verbatim.
    pub config: serde_json::Value,
}

impl ConvergenceReport {
    /// Assemble a report: rows are sorted by parameter; the slope is fitted
    /// over (parameter, abs_error) unless every error sits within
    /// `noise_floor` of zero (then the fit is declared degenerate).
    pub fn new(
        mut rows: Vec<ReportRow>,
        noise_floor: &[f64],
        config: serde_json::Value,
    ) -> ConvergenceReport {
        debug_assert_eq!(rows.len(), noise_floor.len());
        let degenerate = rows
            .iter()
            .zip(noise_floor)
            .all(|(row, nf)| row.abs_error <= 3.0 * nf);
        rows.sort_by(|p, q| p.parameter.total_cmp(&q.parameter));
        let slope = if degenerate {
            SlopeEstimate::Degenerate {
                reason: "all errors at or below the quadrature noise floor".into(),
            }
        } else {
            match fit_slope(
                &rows
                    .iter()
                    .map(|r| (r.parameter, r.abs_error))
                    .collect::<Vec<_>>(),
            ) {
                Ok(SlopeFit { slope, half_width }) => SlopeEstimate::Fitted { slope, half_width },
                Err(e) => SlopeEstimate::Degenerate {
                    reason: format!("slope fit rejected the rows: {e}"),
                },
            }
        };
        ConvergenceReport {
            rows,
            slope,
            config,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::invalid(format!("report serialization failed: {e}")))
    }

    /// Parse and revalidate: rows must be sorted and each stored abs_error
    /// must equal |value − reference| bit-for-bit.
    pub fn from_json(text: &str) -> Result<ConvergenceReport> {
        let report: ConvergenceReport = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("report parse failed: {e}")))?;
        for w in report.rows.windows(2) {
            if w[0].parameter > w[1].parameter {
                return Err(Error::invalid(
                    "report rows are not sorted by parameter",
                ));
            }
        }
        for row in &report.rows {
            let recomputed = (row.value - row.reference).abs();
            if recomputed.to_bits() != row.abs_error.to_bits() {
                return Err(Error::invalid(format!(
                    "stored abs_error {} does not match recomputed |value - reference| {} at parameter {}",
                    row.abs_error, recomputed, row.parameter
                )));
            }
        }
        Ok(report)
    }
}

/// One named pass/fail check with its measured quantities, the row format of
/// the verification suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    /// Measured values backing the verdict, as a JSON object.
    pub quantities: serde_json::Value,
}

impl CheckResult {
    pub fn new(
        name: impl Into<String>,
        pass: bool,
        detail: impl Into<String>,
        quantities: serde_json::Value,
    ) -> CheckResult {
        CheckResult {
            name: name.into(),
            pass,
            detail: detail.into(),
            quantities,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConvergenceReport {
        let rows = vec![
            ReportRow::new(0.25, 1.06, 1.0),
            ReportRow::new(1.0, 2.0, 1.0),
            ReportRow::new(0.5, 1.25, 1.0),
            ReportRow::new(0.125, 1.015, 1.0),
        ];
        ConvergenceReport::new(
            rows,
            &[1e-9; 4],
            serde_json::json!({"study": "unit-test", "alpha": 1.0}),
        )
    }

    #[test]
    fn rows_sorted_and_slope_fitted() {
        let rep = sample();
        assert!(rep.rows.windows(2).all(|w| w[0].parameter <= w[1].parameter));
        match rep.slope {
            SlopeEstimate::Fitted { slope, .. } => {
                assert!((slope - 2.0).abs() < 0.2, "slope {slope}")
            }
            SlopeEstimate::Degenerate { .. } => panic!("expected a fitted slope"),
        }
    }

    #[test]
    fn json_round_trip_revalidates() {
        let rep = sample();
        let text = rep.to_json().unwrap();
        let back = ConvergenceReport::from_json(&text).unwrap();
        assert_eq!(rep, back);
    }

    #[test]
    fn tampered_abs_error_is_rejected() {
        let rep = sample();
        let mut value: serde_json::Value = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        value["rows"][0]["abs_error"] = serde_json::json!(0.123);
        let text = serde_json::to_string(&value).unwrap();
        assert!(ConvergenceReport::from_json(&text).is_err());
    }

    #[test]
    fn noise_floor_makes_degenerate() {
        let rows = vec![
            ReportRow::new(1.0, 1.0 + 1e-12, 1.0),
            ReportRow::new(0.5, 1.0 - 2e-12, 1.0),
            ReportRow::new(0.25, 1.0 + 1e-13, 1.0),
            ReportRow::new(0.125, 1.0 - 5e-13, 1.0),
        ];
        let rep = ConvergenceReport::new(rows, &[1e-11; 4], serde_json::json!({}));
        assert!(matches!(rep.slope, SlopeEstimate::Degenerate { .. }));
    }
}

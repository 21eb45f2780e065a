//! Point-forecast error metrics and the model-by-horizon summary table.

use std::fmt::Write as _;

use chrono::NaiveDateTime;

use crate::error::{Error, Result};

/// Actual irradiance below which a row is left out of MAPE.
pub const DEFAULT_MAPE_THRESHOLD: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastRow {
    pub timestamp: NaiveDateTime,
    pub actual: f64,
    pub predicted: f64,
    pub horizon: usize,
}

fn check_pairs(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} actuals vs {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::InsufficientData("no forecast pairs".into()));
    }
    Ok(())
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pairs(actual, predicted)?;
    let sse: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    Ok((sse / actual.len() as f64).sqrt())
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pairs(actual, predicted)?;
    let sae: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()).sum();
    Ok(sae / actual.len() as f64)
}

/// Percent error averaged over pairs whose actual value reaches
/// `min_actual`.
pub fn mape(actual: &[f64], predicted: &[f64], min_actual: f64) -> Result<f64> {
    check_pairs(actual, predicted)?;
    let (sum, count) = actual
        .iter()
        .zip(predicted)
        .filter(|(a, _)| **a >= min_actual && **a > 0.0)
        .fold((0.0, 0usize), |(s, c), (a, p)| (s + (a - p).abs() / a, c + 1));
    if count == 0 {
        return Err(Error::InsufficientData(format!(
            "no actual value reaches the MAPE threshold of {min_actual} W/m²"
        )));
    }
    Ok(100.0 * sum / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub rmse: f64,
    pub mae: f64,
    pub mape: f64,
}

impl ErrorSummary {
    pub fn from_rows(rows: &[ForecastRow], min_actual: f64) -> Result<Self> {
        let actual: Vec<f64> = rows.iter().map(|r| r.actual).collect();
        let predicted: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
        Ok(Self {
            rmse: rmse(&actual, &predicted)?,
            mae: mae(&actual, &predicted)?,
            mape: mape(&actual, &predicted, min_actual)?,
        })
    }
}

/// Forecast rows of one model, any number of horizons.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastReport {
    pub model: String,
    pub rows: Vec<ForecastRow>,
}

impl ForecastReport {
    pub fn new(model: impl Into<String>, rows: Vec<ForecastRow>) -> Result<Self> {
        if rows
            .iter()
            .any(|r| !r.actual.is_finite() || !r.predicted.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite forecast row".into()));
        }
        Ok(Self {
            model: model.into(),
            rows,
        })
    }

    /// Horizons in first-appearance order.
    pub fn horizons(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.horizon) {
                out.push(r.horizon);
            }
        }
        out
    }

    pub fn rows_for(&self, horizon: usize) -> Vec<ForecastRow> {
        self.rows.iter().filter(|r| r.horizon == horizon).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryCell {
    pub model: String,
    pub horizon: usize,
    pub errors: ErrorSummary,
}

/// Metrics per (model, horizon) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub step_minutes: u32,
    pub cells: Vec<SummaryCell>,
}

pub fn summarize(reports: &[ForecastReport], step_minutes: u32, min_actual: f64) -> Result<Summary> {
    let mut cells = Vec::new();
    for rep in reports {
        for h in rep.horizons() {
            cells.push(SummaryCell {
                model: rep.model.clone(),
                horizon: h,
                errors: ErrorSummary::from_rows(&rep.rows_for(h), min_actual)?,
            });
        }
    }
    Ok(Summary { step_minutes, cells })
}

/// "10 min", "30 min", "1 h", ...
pub fn horizon_label(steps: usize, step_minutes: u32) -> String {
    let minutes = steps as u64 * step_minutes as u64;
    if minutes.is_multiple_of(60) {
        format!("{} h", minutes / 60)
    } else {
        format!("{minutes} min")
    }
}

impl Summary {
    pub fn models(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.model) {
                out.push(c.model.clone());
            }
        }
        out
    }

    pub fn horizons(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.cells.iter().map(|c| c.horizon).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn cell(&self, model: &str, horizon: usize) -> Option<&ErrorSummary> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.horizon == horizon)
            .map(|c| &c.errors)
    }

    /// `model,horizon,rmse,mae,mape`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("model,horizon,rmse,mae,mape\n");
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                c.model, c.horizon, c.errors.rmse, c.errors.mae, c.errors.mape
            );
        }
        s
    }

    /// Metric-major table: RMSE, MAE, MAPE blocks, one line per horizon,
    /// one column per model.
    pub fn to_table(&self) -> String {
        let models = self.models();
        let horizons = self.horizons();
        let mut s = String::new();
        let _ = write!(s, "{:<14}{:<9}", "Error", "Horizon");
        for m in &models {
            let _ = write!(s, "{:>10}", m.to_uppercase());
        }
        s.push('\n');
        let rule = "-".repeat(23 + 10 * models.len());
        s.push_str(&rule);
        s.push('\n');
        let metrics: [(&str, fn(&ErrorSummary) -> f64); 3] = [
            ("RMSE /Wm^-2", |e| e.rmse),
            ("MAE /Wm^-2", |e| e.mae),
            ("MAPE /%", |e| e.mape),
        ];
        for (name, get) in metrics {
            for (i, &h) in horizons.iter().enumerate() {
                let label = if i == 0 { name } else { "" };
                let _ = write!(s, "{:<14}{:<9}", label, horizon_label(h, self.step_minutes));
                for m in &models {
                    match self.cell(m, h) {
                        Some(e) => {
                            let _ = write!(s, "{:>10.2}", get(e));
                        }
                        None => {
                            let _ = write!(s, "{:>10}", "-");
                        }
                    }
                }
                s.push('\n');
            }
            s.push_str(&rule);
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(i: i64) -> NaiveDateTime {
        "2025-01-01T06:00:00".parse::<NaiveDateTime>().unwrap() + chrono::Duration::minutes(10 * i)
    }

    #[test]
    fn hand_values() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let r = rmse(&[10.0, 10.0], &[7.0, 14.0]).unwrap();
        assert!((r - 12.5f64.sqrt()).abs() < 1e-15);
        assert!((r - 3.5355).abs() < 1e-4);
        assert_eq!(mae(&[10.0, 10.0], &[7.0, 14.0]).unwrap(), 3.5);
        assert!((mape(&[200.0], &[170.0], 20.0).unwrap() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(rmse(&[], &[]).is_err());
        assert!(mae(&[1.0], &[]).is_err());
        assert!(mape(&[5.0, 10.0], &[5.0, 9.0], 20.0).is_err());
    }

    #[test]
    fn mape_threshold_filters() {
        let a = [0.0, 10.0, 100.0, 400.0];
        let p = [30.0, 20.0, 110.0, 300.0];
        // only 100 and 400 qualify: (10% + 25%) / 2
        assert!((mape(&a, &p, 20.0).unwrap() - 17.5).abs() < 1e-12);
    }

    #[test]
    fn table_shape() {
        let mut reports = Vec::new();
        for model in ["cnn", "ar", "lstm", "mar"] {
            let mut rows = Vec::new();
            for h in [1, 3, 6] {
                for i in 0..10 {
                    rows.push(ForecastRow {
                        timestamp: ts(i),
                        actual: 100.0 + i as f64,
                        predicted: 90.0 + i as f64 * h as f64,
                        horizon: h,
                    });
                }
            }
            reports.push(ForecastReport::new(model, rows).unwrap());
        }
        let s = summarize(&reports, 10, 20.0).unwrap();
        assert_eq!(s.cells.len(), 12);
        assert_eq!(s.cells.len() * 3, 36);
        let table = s.to_table();
        assert!(table.contains("10 min") && table.contains("30 min") && table.contains("1 h"));
        assert_eq!(s.to_csv().lines().count(), 13);

        let one = summarize(&reports[..1], 10, 20.0).unwrap();
        let e = one.cell("cnn", 1).unwrap();
        assert!(e.rmse > 0.0 && e.mae > 0.0 && e.mape > 0.0);
    }

    #[test]
    fn labels() {
        assert_eq!(horizon_label(1, 10), "10 min");
        assert_eq!(horizon_label(3, 10), "30 min");
        assert_eq!(horizon_label(6, 10), "1 h");
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae_and_ignores_order(
            pairs in prop::collection::vec((0.0f64..1200.0, 0.0f64..1200.0), 1..200),
            rot in 0usize..200,
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let r = rmse(&a, &p).unwrap();
            let m = mae(&a, &p).unwrap();
            prop_assert!(r >= m - 1e-9 * r.max(1.0));
            prop_assert!(r >= 0.0 && m >= 0.0);

            let k = rot % a.len();
            let mut a2 = a.clone();
            let mut p2 = p.clone();
            a2.rotate_left(k);
            p2.rotate_left(k);
            prop_assert!((rmse(&a2, &p2).unwrap() - r).abs() <= 1e-9 * r.max(1.0));
            prop_assert!((mae(&a2, &p2).unwrap() - m).abs() <= 1e-9 * m.max(1.0));
            if let Ok(x) = mape(&a, &p, 20.0) {
                prop_assert!((mape(&a2, &p2, 20.0).unwrap() - x).abs() <= 1e-9 * x.max(1.0));
            }
        }
    }
}

//! Autoregression on ensemble-deducted irradiance.
//!
//! The series is standardized, the per-slot training mean is removed, and a
//! linear model without intercept maps the `m` most recent values to the
//! value `h` steps ahead. One weight vector is fitted per horizon (direct
//! strategy) unless the recursive strategy is selected, in which case the
//! one-step weights are iterated. With the ensemble step disabled the same
//! pipeline is a plain AR model on standardized values.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::dataset::{row_bases, DaylightWindow, IrradianceSeries, Scaler};
use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::metrics::ForecastRow;
use crate::persist::{fmt_f64, parse_f64s, LineReader};
use crate::stats::{ensemble_deduct, ensemble_profile, EnsembleProfile};

pub const MODEL_MAGIC: &str = "mar-model v1";
pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_HORIZONS: [usize; 3] = [1, 3, 6];
/// Minimum training rows per design column.
pub const ROWS_PER_COLUMN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Separate least-squares fit for each horizon.
    #[default]
    Direct,
    /// One-step weights applied repeatedly, feeding predictions back as lags.
    Recursive,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Direct => "direct",
            Strategy::Recursive => "recursive",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Strategy::Direct),
            "recursive" => Ok(Strategy::Recursive),
            _ => Err(Error::ModelFormat(format!("unknown strategy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarConfig {
    pub order: usize,
    pub horizons: Vec<usize>,
    pub window: DaylightWindow,
    pub ensemble_enabled: bool,
    pub strategy: Strategy,
}

impl Default for MarConfig {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            horizons: DEFAULT_HORIZONS.to_vec(),
            window: DaylightWindow::default(),
            ensemble_enabled: true,
            strategy: Strategy::Direct,
        }
    }
}

/// Lagged rows `[x(n-1), .., x(n-m)]` with targets `x(n+h-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `rows * cols`.
    pub data: Vec<f64>,
    pub targets: Vec<f64>,
    /// Series index of `n` for each row.
    pub bases: Vec<usize>,
}

impl DesignMatrix {
    /// Builds every row the daylight window admits, with no minimum row
    /// count.
    pub fn from_series(
        series: &IrradianceSeries,
        order: usize,
        horizon: usize,
        window: DaylightWindow,
    ) -> Result<Self> {
        if order == 0 || horizon == 0 {
            return Err(Error::InvalidArgument(format!(
                "order ({order}) and horizon ({horizon}) must be at least 1"
            )));
        }
        let x = series.values();
        let bases = row_bases(
            series.samples_per_day(),
            series.days(),
            series.step_minutes(),
            window,
            order,
            horizon,
        );
        let mut data = Vec::with_capacity(bases.len() * order);
        let mut targets = Vec::with_capacity(bases.len());
        for &n in &bases {
            data.extend((1..=order).map(|k| x[n - k]));
            targets.push(x[n + horizon - 1]);
        }
        Ok(Self {
            rows: bases.len(),
            cols: order,
            data,
            targets,
            bases,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `(max |X^T (X w - y)|, max |X^T y|)`, the two sides of the
    /// normal-equation optimality check.
    pub fn residual_orthogonality(&self, weights: &[f64]) -> (f64, f64) {
        let mut xtr = vec![0.0; self.cols];
        let mut xty = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let pred: f64 = row.iter().zip(weights).map(|(a, b)| a * b).sum();
            let resid = pred - self.targets[i];
            for j in 0..self.cols {
                xtr[j] += row[j] * resid;
                xty[j] += row[j] * self.targets[i];
            }
        }
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (inf(&xtr), inf(&xty))
    }
}

/// [`DesignMatrix::from_series`] plus the minimum row-count check needed
/// for a stable fit.
pub fn build_design_matrix(
    series: &IrradianceSeries,
    order: usize,
    horizon: usize,
    window: DaylightWindow,
) -> Result<DesignMatrix> {
    let m = DesignMatrix::from_series(series, order, horizon, window)?;
    if m.rows < ROWS_PER_COLUMN * order {
        return Err(Error::InsufficientData(format!(
            "{} design rows for order {order}; need at least {}",
            m.rows,
            ROWS_PER_COLUMN * order
        )));
    }
    Ok(m)
}

/// Columns whose RMS falls below this (in standardized units) hold nothing
/// but round-off.
const MIN_COLUMN_RMS: f64 = 1e-9;

/// Least-squares weights minimizing the summed squared prediction error.
pub fn fit(matrix: &DesignMatrix) -> Result<Vec<f64>> {
    for j in 0..matrix.cols {
        let ss: f64 = (0..matrix.rows).map(|i| matrix.row(i)[j].powi(2)).sum();
        if matrix.rows == 0 || (ss / matrix.rows as f64).sqrt() < MIN_COLUMN_RMS {
            return Err(Error::RankDeficient {
                condition: f64::INFINITY,
            });
        }
    }
    let w = lstsq(&matrix.data, matrix.rows, matrix.cols, &matrix.targets)?;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
        });
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarModel {
    pub order: usize,
    pub horizons: Vec<usize>,
    /// One length-`order` vector per entry of `horizons`.
    pub weights: Vec<Vec<f64>>,
    pub scaler: Scaler,
    pub profile: EnsembleProfile,
    pub window: DaylightWindow,
    pub ensemble_enabled: bool,
    pub strategy: Strategy,
    pub step_minutes: u32,
}

impl MarModel {
    /// Scaler, then profile, then one least-squares fit per horizon.
    pub fn fit_all_horizons(train: &IrradianceSeries, config: &MarConfig) -> Result<Self> {
        if config.horizons.is_empty() || config.horizons.contains(&0) {
            return Err(Error::InvalidArgument(
                "horizons must be a non-empty list of positive step counts".into(),
            ));
        }
        let scaler = Scaler::fit(train)?;
        let z = scaler.standardize(train)?;
        let profile = ensemble_profile(&z)?;
        let domain = if config.ensemble_enabled {
            ensemble_deduct(&z, &profile)?
        } else {
            z
        };

        let weights = match config.strategy {
            Strategy::Direct => config
                .horizons
                .iter()
                .map(|&h| fit(&build_design_matrix(&domain, config.order, h, config.window)?))
                .collect::<Result<Vec<_>>>()?,
            Strategy::Recursive => {
                let one_step = fit(&build_design_matrix(&domain, config.order, 1, config.window)?)?;
                vec![one_step; config.horizons.len()]
            }
        };

        Ok(Self {
            order: config.order,
            horizons: config.horizons.clone(),
            weights,
            scaler,
            profile,
            window: config.window,
            ensemble_enabled: config.ensemble_enabled,
            strategy: config.strategy,
            step_minutes: train.step_minutes(),
        })
    }

    pub fn weights_for(&self, horizon: usize) -> Result<&[f64]> {
        self.horizons
            .iter()
            .position(|&h| h == horizon)
            .map(|i| self.weights[i].as_slice())
            .ok_or(Error::UnfittedHorizon(horizon))
    }

    /// Model-domain prediction `horizon` steps ahead from `lags`, most
    /// recent first.
    pub fn predict_step(&self, lags: &[f64], horizon: usize) -> Result<f64> {
        if lags.len() != self.order {
            return Err(Error::ShapeMismatch(format!(
                "expected {} lags, got {}",
                self.order,
                lags.len()
            )));
        }
        let w = self.weights_for(horizon)?;
        match self.strategy {
            Strategy::Direct => Ok(dot(w, lags)),
            Strategy::Recursive => {
                let mut buf = lags.to_vec();
                let mut pred = 0.0;
                for _ in 0..horizon {
                    pred = dot(w, &buf);
                    buf.rotate_right(1);
                    buf[0] = pred;
                }
                Ok(pred)
            }
        }
    }

    pub fn forecast(&self, test: &IrradianceSeries, horizon: usize) -> Result<Vec<ForecastRow>> {
        self.forecast_with_support(test, horizon, self.order)
    }

    /// Forecasts every daylight slot whose `support` preceding samples lie
    /// inside the window. `support >= order` lets several models share one
    /// row set.
    pub fn forecast_with_support(
        &self,
        test: &IrradianceSeries,
        horizon: usize,
        support: usize,
    ) -> Result<Vec<ForecastRow>> {
        self.weights_for(horizon)?;
        if test.step_minutes() != self.step_minutes
            || test.samples_per_day() != self.profile.samples_per_day()
        {
            return Err(Error::GridMismatch(format!(
                "model sampled every {} min, test every {} min",
                self.step_minutes,
                test.step_minutes()
            )));
        }
        let support = support.max(self.order);
        let z = self.scaler.standardize(test)?;
        let domain = if self.ensemble_enabled {
            ensemble_deduct(&z, &self.profile)?
        } else {
            z
        };
        let x = domain.values();
        let raw = test.values();
        let bases = row_bases(
            test.samples_per_day(),
            test.days(),
            test.step_minutes(),
            self.window,
            support,
            horizon,
        );
        let mut lags = vec![0.0; self.order];
        bases
            .into_iter()
            .map(|n| {
                for (k, lag) in lags.iter_mut().enumerate() {
                    *lag = x[n - 1 - k];
                }
                let target = n + horizon - 1;
                let mut pred = self.predict_step(&lags, horizon)?;
                if self.ensemble_enabled {
                    pred += self.profile.at_slot(test.slot(target));
                }
                Ok(ForecastRow {
                    timestamp: test.timestamp(target),
                    actual: raw[target],
                    predicted: self.scaler.from_z(pred).max(0.0),
                    horizon,
                })
            })
            .collect()
    }

    pub fn save(&self, mut w: impl Write, comments: &[String]) -> std::io::Result<()> {
        writeln!(w, "{MODEL_MAGIC}")?;
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "step_minutes {}", self.step_minutes)?;
        writeln!(w, "order {}", self.order)?;
        writeln!(w, "ensemble {}", self.ensemble_enabled)?;
        writeln!(w, "strategy {}", self.strategy)?;
        writeln!(w, "daylight {}", self.window)?;
        writeln!(w, "scaler {} {}", fmt_f64(self.scaler.mu), fmt_f64(self.scaler.sigma))?;
        writeln!(w, "horizons {}", self.horizons.len())?;
        for (h, ws) in self.horizons.iter().zip(&self.weights) {
            let ws: Vec<String> = ws.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(w, "weights {h} {}", ws.join(" "))?;
        }
        writeln!(w, "profile {}", self.profile.means.len())?;
        for (m, c) in self.profile.means.iter().zip(&self.profile.support_counts) {
            writeln!(w, "{} {c}", fmt_f64(*m))?;
        }
        w.flush()
    }

    pub fn load(r: impl BufRead) -> Result<Self> {
        let mut lines = LineReader::new(r);
        lines.expect_magic(MODEL_MAGIC)?;
        let step_minutes = lines.keyed_parse("step_minutes")?;
        let order: usize = lines.keyed_parse("order")?;
        let ensemble_enabled = lines.keyed_parse("ensemble")?;
        let strategy = lines.keyed_parse("strategy")?;
        let window = lines.keyed_parse("daylight")?;
        let sc = parse_f64s(&lines.keyed("scaler")?)?;
        if sc.len() != 2 {
            return Err(Error::ModelFormat("scaler needs mu and sigma".into()));
        }
        let scaler = Scaler::new(sc[0], sc[1])?;
        let nh: usize = lines.keyed_parse("horizons")?;
        let mut horizons = Vec::with_capacity(nh);
        let mut weights = Vec::with_capacity(nh);
        for _ in 0..nh {
            let rest = lines.keyed("weights")?;
            let (h, ws) = rest
                .split_once(' ')
                .ok_or_else(|| Error::ModelFormat("weights line without values".into()))?;
            let h: usize = h
                .parse()
                .map_err(|_| Error::ModelFormat(format!("bad horizon `{h}`")))?;
            let ws = parse_f64s(ws)?;
            if ws.len() != order {
                return Err(Error::ModelFormat(format!(
                    "horizon {h} has {} weights, order is {order}",
                    ws.len()
                )));
            }
            horizons.push(h);
            weights.push(ws);
        }
        let len: usize = lines.keyed_parse("profile")?;
        let mut means = Vec::with_capacity(len);
        let mut counts = Vec::with_capacity(len);
        for _ in 0..len {
            let line = lines.next_line()?;
            let (m, c) = line
                .split_once(' ')
                .ok_or_else(|| Error::ModelFormat(format!("bad profile line `{line}`")))?;
            means.push(parse_f64s(m)?[0]);
            counts.push(
                c.parse()
                    .map_err(|_| Error::ModelFormat(format!("bad support count `{c}`")))?,
            );
        }
        Ok(Self {
            order,
            horizons,
            weights,
            scaler,
            profile: EnsembleProfile::new(means, counts)
                .map_err(|e| Error::ModelFormat(e.to_string()))?,
            window,
            ensemble_enabled,
            strategy,
            step_minutes,
        })
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, Regime};
    use chrono::NaiveDateTime;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn t0() -> NaiveDateTime {
        "2025-01-01T00:00:00".parse().unwrap()
    }

    fn toy_model(order: usize, weights: Vec<f64>) -> MarModel {
        MarModel {
            order,
            horizons: vec![1],
            weights: vec![weights],
            scaler: Scaler::new(0.0, 1.0).unwrap(),
            profile: EnsembleProfile::new(vec![0.0; 144], vec![1; 144]).unwrap(),
            window: DaylightWindow::default(),
            ensemble_enabled: true,
            strategy: Strategy::Direct,
            step_minutes: 10,
        }
    }

    #[test]
    fn toy_day_rows_by_hand() {
        // window 06:00-07:10 is slots 36..=43, eight samples
        let window: DaylightWindow = "06:00-07:10".parse().unwrap();
        let mut v = vec![0.0; 144];
        for (k, slot) in (36..44).enumerate() {
            v[slot] = (k + 1) as f64;
        }
        let s = IrradianceSeries::new(t0(), 10, v).unwrap();
        let m = DesignMatrix::from_series(&s, 2, 1, window).unwrap();
        assert_eq!(m.rows, 6);
        let expect_rows = [[2.0, 1.0], [3.0, 2.0], [4.0, 3.0], [5.0, 4.0], [6.0, 5.0], [7.0, 6.0]];
        for (i, r) in expect_rows.iter().enumerate() {
            assert_eq!(m.row(i), r);
        }
        assert_eq!(m.targets, vec![3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert!(build_design_matrix(&s, 2, 1, window).is_err());
    }

    #[test]
    fn row_counts_on_75_slot_window() {
        let window: DaylightWindow = "06:00-18:20".parse().unwrap();
        let s = IrradianceSeries::new(t0(), 10, (0..144).map(|i| i as f64).collect()).unwrap();
        assert_eq!(DesignMatrix::from_series(&s, 4, 1, window).unwrap().rows, 71);
        assert_eq!(DesignMatrix::from_series(&s, 4, 6, window).unwrap().rows, 66);
    }

    #[test]
    fn rows_never_cross_midnight() {
        let s = generate_synthetic(3, Regime::Mixed, 1).unwrap();
        let m = DesignMatrix::from_series(&s, 4, 6, DaylightWindow::default()).unwrap();
        for &n in &m.bases {
            assert_eq!((n - 4) / 144, (n + 5) / 144);
        }
    }

    #[test]
    fn persistence_target_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let v: Vec<f64> = (0..144 * 3).map(|_| noise.sample(&mut rng)).collect();
        let s = IrradianceSeries::new(t0(), 10, v).unwrap();
        let mut m = build_design_matrix(&s, 4, 1, DaylightWindow::default()).unwrap();
        m.targets = (0..m.rows).map(|i| m.row(i)[0]).collect();
        let w = fit(&m).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-10);
        for wk in &w[1..] {
            assert!(wk.abs() < 1e-10);
        }
        let (xtr, xty) = m.residual_orthogonality(&w);
        assert!(xtr < 1e-8 * xty);
    }

    #[test]
    fn recovers_order_two_recurrence_with_noise() {
        // each day restarts from a random state; innovation std 1e-3
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let init = Normal::new(0.0, 1.0).unwrap();
        let eps = Normal::new(0.0, 1e-3).unwrap();
        let window = DaylightWindow::default();
        let (first, last) = window.slot_range(10);
        let days = 80;
        let mut v = vec![0.0; 144 * days];
        for d in 0..days {
            let b = d * 144;
            v[b + first] = init.sample(&mut rng);
            v[b + first + 1] = init.sample(&mut rng);
            for s in first + 2..=last {
                v[b + s] = 0.5 * v[b + s - 1] + 0.3 * v[b + s - 2] + eps.sample(&mut rng);
            }
        }
        let s = IrradianceSeries::new(t0(), 10, v).unwrap();
        let m = build_design_matrix(&s, 2, 1, window).unwrap();
        assert!(m.rows >= 5000);
        let w = fit(&m).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-3 && (w[1] - 0.3).abs() < 1e-3, "{w:?}");
        let (xtr, xty) = m.residual_orthogonality(&w);
        assert!(xtr < 1e-8 * xty);
    }

    #[test]
    fn predict_step_cases() {
        let m = toy_model(4, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(m.predict_step(&[3.5, 1.0, 2.0, 9.0], 1).unwrap(), 3.5);
        assert_eq!(m.predict_step(&[0.0; 4], 1).unwrap(), 0.0);
        assert!(matches!(m.predict_step(&[0.0; 3], 1), Err(Error::ShapeMismatch(_))));
        assert!(matches!(m.predict_step(&[0.0; 4], 3), Err(Error::UnfittedHorizon(3))));
        let m = toy_model(2, vec![0.5, 0.3]);
        assert!((m.predict_step(&[2.0, -1.0], 1).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn recursive_iterates_one_step_weights() {
        let mut m = toy_model(2, vec![0.5, 0.3]);
        m.strategy = Strategy::Recursive;
        m.horizons = vec![1, 3];
        m.weights = vec![vec![0.5, 0.3]; 2];
        // x1 = .5*2 + .3*1 = 1.3; x2 = .5*1.3 + .3*2 = 1.25; x3 = .5*1.25 + .3*1.3 = 1.015
        let p = m.predict_step(&[2.0, 1.0], 3).unwrap();
        assert!((p - 1.015).abs() < 1e-12);
    }

    #[test]
    fn profile_day_with_zero_lags_returns_profile() {
        let train = generate_synthetic(40, Regime::Mixed, 5).unwrap();
        let model = MarModel::fit_all_horizons(&train, &MarConfig::default()).unwrap();
        // a test day equal to the profile is all-zero in the model domain
        let day: Vec<f64> = model
            .profile
            .means
            .iter()
            .map(|&z| model.scaler.from_z(z).max(0.0))
            .collect();
        let test = IrradianceSeries::new(t0(), 10, day).unwrap();
        for &h in &model.horizons {
            for row in model.forecast(&test, h).unwrap() {
                let slot = ((row.timestamp - t0()).num_minutes() / 10) as usize;
                let expect = model.scaler.from_z(model.profile.means[slot]).max(0.0);
                // lags are zero up to the clipping round-off of the raw day
                assert!((row.predicted - expect).abs() < 1e-9, "h={h} slot={slot}");
            }
        }
    }

    #[test]
    fn forecasts_non_negative_and_shaped() {
        let data = generate_synthetic(60, Regime::Cloudy, 8).unwrap();
        let (train, test) = crate::dataset::split(&data, 0.7).unwrap();
        let model = MarModel::fit_all_horizons(&train, &MarConfig::default()).unwrap();
        assert_eq!(model.weights.len(), 3);
        assert!(model.weights.iter().all(|w| w.len() == 4));
        for &h in &[1, 3, 6] {
            let rows = model.forecast(&test, h).unwrap();
            assert_eq!(rows.len(), test.days() * (76 - 4 - h + 1));
            assert!(rows.iter().all(|r| r.predicted >= 0.0));
        }
        assert!(matches!(model.forecast(&test, 2), Err(Error::UnfittedHorizon(2))));
    }

    #[test]
    fn clear_training_data_is_rank_deficient() {
        let train = generate_synthetic(20, Regime::Clear, 1).unwrap();
        assert!(matches!(
            MarModel::fit_all_horizons(&train, &MarConfig::default()),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let data = generate_synthetic(30, Regime::Mixed, 21).unwrap();
        let (train, test) = crate::dataset::split(&data, 0.7).unwrap();
        for ensemble_enabled in [true, false] {
            let cfg = MarConfig {
                ensemble_enabled,
                ..MarConfig::default()
            };
            let model = MarModel::fit_all_horizons(&train, &cfg).unwrap();
            let mut buf = Vec::new();
            model.save(&mut buf, &["seed=21".into()]).unwrap();
            let back = MarModel::load(buf.as_slice()).unwrap();
            assert_eq!(back, model);
            for h in [1, 3, 6] {
                let a = model.forecast(&test, h).unwrap();
                let b = back.forecast(&test, h).unwrap();
                assert!(a
                    .iter()
                    .zip(&b)
                    .all(|(p, q)| p.predicted.to_bits() == q.predicted.to_bits()));
            }
        }
    }

    #[test]
    fn load_rejects_garbage() {
        assert!(MarModel::load("nn-model v1\n".as_bytes()).is_err());
        assert!(MarModel::load("mar-model v1\norder x\n".as_bytes()).is_err());
    }
}

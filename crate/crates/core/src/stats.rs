//! Per-time-of-day ensemble profiles and correlation diagnostics.

use crate::dataset::IrradianceSeries;
use crate::error::{Error, Result};

pub const DEFAULT_ORDER_THRESHOLD: f64 = 0.1;

/// Expected standardized value at each time-of-day slot over the training
/// days.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleProfile {
    pub means: Vec<f64>,
    pub support_counts: Vec<usize>,
}

impl EnsembleProfile {
    pub fn new(means: Vec<f64>, support_counts: Vec<usize>) -> Result<Self> {
        if means.is_empty() || means.len() != support_counts.len() {
            return Err(Error::ShapeMismatch(format!(
                "profile has {} means and {} support counts",
                means.len(),
                support_counts.len()
            )));
        }
        if support_counts.contains(&0) {
            return Err(Error::InvalidArgument("profile slot with zero support".into()));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument("non-finite profile mean".into()));
        }
        Ok(Self {
            means,
            support_counts,
        })
    }

    pub fn samples_per_day(&self) -> usize {
        self.means.len()
    }

    #[inline]
    pub fn at_slot(&self, slot: usize) -> f64 {
        self.means[slot]
    }

    fn check_alignment(&self, series: &IrradianceSeries) -> Result<()> {
        if series.samples_per_day() != self.means.len() {
            return Err(Error::GridMismatch(format!(
                "profile has {} slots per day, series has {}",
                self.means.len(),
                series.samples_per_day()
            )));
        }
        Ok(())
    }
}

pub fn ensemble_profile(train: &IrradianceSeries) -> Result<EnsembleProfile> {
    let days = train.days();
    if days == 0 {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    let spd = train.samples_per_day();
    let mut sums = vec![0.0; spd];
    for d in 0..days {
        for (s, v) in sums.iter_mut().zip(train.day(d)) {
            *s += v;
        }
    }
    let means = sums.into_iter().map(|s| s / days as f64).collect();
    EnsembleProfile::new(means, vec![days; spd])
}

/// Subtracts each sample's slot mean.
pub fn ensemble_deduct(
    series: &IrradianceSeries,
    profile: &EnsembleProfile,
) -> Result<IrradianceSeries> {
    profile.check_alignment(series)?;
    let spd = profile.samples_per_day();
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v - profile.means[i % spd])
        .collect();
    series.with_values(values)
}

/// Adds each sample's slot mean back.
pub fn ensemble_add(series: &IrradianceSeries, profile: &EnsembleProfile) -> Result<IrradianceSeries> {
    profile.check_alignment(series)?;
    let spd = profile.samples_per_day();
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v + profile.means[i % spd])
        .collect();
    series.with_values(values)
}

/// Correlation per lag, lag 0 first.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSequence {
    pub values: Vec<f64>,
}

impl CorrelationSequence {
    pub fn max_lag(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn at(&self, lag: usize) -> f64 {
        self.values[lag]
    }
}

/// Normalized sample estimate of `E[x(n-lag) * x(n)]`.
///
/// Each lag product sum is divided by the full length `N` (not `N - lag`),
/// which keeps the sequence positive semi-definite and inside [-1, 1]; the
/// input is assumed to be already centered, so no mean is removed.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<CorrelationSequence> {
    let n = series.len();
    if max_lag >= n {
        return Err(Error::InvalidArgument(format!(
            "max lag {max_lag} must be below the series length {n}"
        )));
    }
    let r0: f64 = series.iter().map(|x| x * x).sum();
    if r0 == 0.0 {
        return Err(Error::InsufficientData("all-zero series has no autocorrelation".into()));
    }
    let values = (0..=max_lag)
        .map(|lag| {
            if lag == 0 {
                return 1.0;
            }
            let s: f64 = series[lag..]
                .iter()
                .zip(&series[..n - lag])
                .map(|(a, b)| a * b)
                .sum();
            s / r0
        })
        .collect();
    Ok(CorrelationSequence { values })
}

/// Durbin-Levinson recursion over an autocorrelation sequence. The value
/// at lag k is the last coefficient of the best order-k linear predictor.
pub fn pacf_from_acf(acf: &CorrelationSequence) -> Result<CorrelationSequence> {
    let r = &acf.values;
    let max_lag = acf.max_lag();
    let mut pacf = Vec::with_capacity(max_lag + 1);
    pacf.push(1.0);
    let mut phi: Vec<f64> = Vec::with_capacity(max_lag);
    let mut variance = r[0];
    for k in 1..=max_lag {
        if variance <= 1e-12 * r[0] {
            return Err(Error::SingularRecursion { lag: k, variance });
        }
        let num = r[k] - phi.iter().enumerate().map(|(j, p)| p * r[k - 1 - j]).sum::<f64>();
        let kappa = num / variance;
        let next: Vec<f64> = (0..k - 1)
            .map(|j| phi[j] - kappa * phi[k - 2 - j])
            .chain(std::iter::once(kappa))
            .collect();
        phi = next;
        variance *= 1.0 - kappa * kappa;
        pacf.push(kappa);
    }
    Ok(CorrelationSequence { values: pacf })
}

pub fn partial_autocorrelation(series: &[f64], max_lag: usize) -> Result<CorrelationSequence> {
    pacf_from_acf(&autocorrelation(series, max_lag)?)
}

/// Largest lag `m` such that every |PACF| at lags `1..=m` reaches the
/// threshold; 1 when the first lag already falls short.
pub fn select_order(pacf: &CorrelationSequence, threshold: f64) -> usize {
    pacf.values
        .iter()
        .skip(1)
        .take_while(|v| v.abs() >= threshold)
        .count()
        .max(1)
}
